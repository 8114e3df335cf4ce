#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace scramble {

using NodeId = std::uint32_t;
using BlockId = std::uint32_t;
using SimTime = double;  // milliseconds since simulation start

inline constexpr NodeId kNoNode = 0xffffffffu;

enum class ForwardingMode { undirected, directed };

std::string to_string(ForwardingMode mode);
ForwardingMode forwarding_mode_from_string(const std::string& text);

// All tunables of one experiment. Field names double as config-file keys and
// CLI flag names, so they stay exactly as listed here.
struct ExperimentConfig {
    std::uint32_t node_count = 1000;
    std::uint32_t S = 3;  // scoring links
    std::uint32_t C = 3;  // close links
    std::uint32_t R = 2;  // random/refresh links
    std::uint32_t k = 100;                  // blocks per scoring round
    double close_period = 10000.0;          // msec
    std::uint32_t ping_count = 5;           // pings per close cycle
    double header_validation = 5.0;         // msec
    double body_validation = 50.0;          // msec
    double total_rtts = 1.5;                // half-integer RTT budget per transfer
    std::uint32_t calibration_rounds = 128;
    std::uint32_t measurement_blocks = 100;
    double inter_block_gap = 30000.0;       // msec between block generations
    ForwardingMode forwarding_mode = ForwardingMode::undirected;
    std::optional<std::uint32_t> max_inbound;  // absent = unlimited
    double intra_city_latency = 2.0;           // msec
    std::uint64_t seed = 1;

    bool operator==(const ExperimentConfig&) const = default;
};

struct InvalidConfig : std::runtime_error {
    explicit InvalidConfig(std::vector<std::string> violations);
    std::vector<std::string> violations;
};

// Proof-of-validation wrapper; construction only via validate_config.
class ValidatedConfig {
public:
    const ExperimentConfig& get() const { return cfg_; }
    const ExperimentConfig* operator->() const { return &cfg_; }
    const ExperimentConfig& operator*() const { return cfg_; }

    std::uint32_t scoring_refresh() const;
    std::uint32_t close_refresh() const;
    std::uint32_t scoring_target() const { return cfg_.S + scoring_refresh(); }
    std::uint32_t close_target() const { return cfg_.C + close_refresh(); }
    // Number of 1-RTT pull rounds after the announcement leg.
    std::uint32_t pull_rounds() const { return static_cast<std::uint32_t>(cfg_.total_rtts - 0.5); }

private:
    friend ValidatedConfig validate_config(const ExperimentConfig& cfg);
    explicit ValidatedConfig(ExperimentConfig cfg) : cfg_(std::move(cfg)) {}
    ExperimentConfig cfg_;
};

// Throws InvalidConfig listing every violated invariant.
ValidatedConfig validate_config(const ExperimentConfig& cfg);
inline const ValidatedConfig& validate_config(const ValidatedConfig& cfg) { return cfg; }

// (scoring_refresh, close_refresh): how the R slots split between the sets.
std::pair<std::uint32_t, std::uint32_t> refresh_slots(const ValidatedConfig& cfg);

// Flat `key = value` config file; keys are the field names above.
struct ConfigParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
ExperimentConfig load_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string format_config(const ExperimentConfig& cfg);
void save_config_file(const std::string& path, const ExperimentConfig& cfg);

}  // namespace scramble
