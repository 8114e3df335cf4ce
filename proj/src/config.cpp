#include "scramble/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace scramble {

std::string to_string(ForwardingMode mode) {
    return mode == ForwardingMode::undirected ? "undirected" : "directed";
}

ForwardingMode forwarding_mode_from_string(const std::string& text) {
    if (text == "undirected") return ForwardingMode::undirected;
    if (text == "directed") return ForwardingMode::directed;
    throw ConfigParseError("unknown forwarding_mode: " + text);
}

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::string out = "invalid config:";
    for (const auto& p : parts) out += "\n  - " + p;
    return out;
}

bool both_heuristic_sets_split_r(const ExperimentConfig& c) {
    return (c.S > 0 && c.C > 0) || (c.S == 0 && c.C == 0);
}

}  // namespace

InvalidConfig::InvalidConfig(std::vector<std::string> v)
    : std::runtime_error(join(v)), violations(std::move(v)) {}

ValidatedConfig validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> violations;

    if (cfg.node_count == 0) violations.push_back("node_count must be positive");
    if (cfg.S + cfg.C + cfg.R < 1) violations.push_back("S + C + R must be at least 1");
    if (cfg.node_count <= cfg.S + cfg.C + cfg.R)
        violations.push_back("node_count must exceed S + C + R");
    if (both_heuristic_sets_split_r(cfg) && cfg.R % 2 != 0)
        violations.push_back("R must be even when the refresh slots split across both sets");
    if (cfg.S + cfg.C > 0 && cfg.R == 0)
        violations.push_back("R must be at least 1 when any heuristic set is in use");
    if (cfg.k == 0) violations.push_back("k must be positive");
    if (cfg.close_period <= 0.0) violations.push_back("close_period must be positive");
    if (cfg.ping_count == 0) violations.push_back("ping_count must be positive");
    if (cfg.header_validation < 0.0) violations.push_back("header_validation must be >= 0");
    if (cfg.body_validation < 0.0) violations.push_back("body_validation must be >= 0");

    const double rounds = cfg.total_rtts - 0.5;
    if (!(cfg.total_rtts >= 0.5) || rounds != std::floor(rounds))
        violations.push_back("total_rtts must be a half-integer >= 0.5 (0.5, 1.5, 2.5, ...)");

    if (cfg.measurement_blocks == 0) violations.push_back("measurement_blocks must be positive");
    if (cfg.inter_block_gap <= 0.0) violations.push_back("inter_block_gap must be positive");
    if (cfg.max_inbound && *cfg.max_inbound == 0)
        violations.push_back("max_inbound must be positive when set");
    if (cfg.intra_city_latency <= 0.0) violations.push_back("intra_city_latency must be positive");

    if (!violations.empty()) throw InvalidConfig(std::move(violations));
    return ValidatedConfig(cfg);
}

std::uint32_t ValidatedConfig::scoring_refresh() const {
    if (both_heuristic_sets_split_r(cfg_)) return cfg_.R / 2;
    return cfg_.C == 0 ? cfg_.R : 0;
}

std::uint32_t ValidatedConfig::close_refresh() const {
    if (both_heuristic_sets_split_r(cfg_)) return cfg_.R / 2;
    return cfg_.S == 0 ? cfg_.R : 0;
}

std::pair<std::uint32_t, std::uint32_t> refresh_slots(const ValidatedConfig& cfg) {
    return {cfg.scoring_refresh(), cfg.close_refresh()};
}

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigParseError("key '" + key + "': expected unsigned integer, got '" + value + "'");
    }
}

std::uint32_t parse_u32(const std::string& key, const std::string& value) {
    const std::uint64_t v = parse_u64(key, value);
    if (v > 0xffffffffULL)
        throw ConfigParseError("key '" + key + "': value out of range: " + value);
    return static_cast<std::uint32_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigParseError("key '" + key + "': expected number, got '" + value + "'");
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void apply_config_line(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "node_count") cfg.node_count = parse_u32(key, value);
    else if (key == "S") cfg.S = parse_u32(key, value);
    else if (key == "C") cfg.C = parse_u32(key, value);
    else if (key == "R") cfg.R = parse_u32(key, value);
    else if (key == "k") cfg.k = parse_u32(key, value);
    else if (key == "close_period") cfg.close_period = parse_double(key, value);
    else if (key == "ping_count") cfg.ping_count = parse_u32(key, value);
    else if (key == "header_validation") cfg.header_validation = parse_double(key, value);
    else if (key == "body_validation") cfg.body_validation = parse_double(key, value);
    else if (key == "total_rtts") cfg.total_rtts = parse_double(key, value);
    else if (key == "calibration_rounds") cfg.calibration_rounds = parse_u32(key, value);
    else if (key == "measurement_blocks") cfg.measurement_blocks = parse_u32(key, value);
    else if (key == "inter_block_gap") cfg.inter_block_gap = parse_double(key, value);
    else if (key == "forwarding_mode") cfg.forwarding_mode = forwarding_mode_from_string(value);
    else if (key == "max_inbound") {
        if (value == "none" || value.empty()) cfg.max_inbound.reset();
        else cfg.max_inbound = parse_u32(key, value);
    } else if (key == "intra_city_latency") cfg.intra_city_latency = parse_double(key, value);
    else if (key == "seed") cfg.seed = parse_u64(key, value);
    else throw ConfigParseError("unknown config key: " + key);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError("cannot open config file: " + path);
    ExperimentConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigParseError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        apply_config_line(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "node_count = " << cfg.node_count << '\n';
    out << "S = " << cfg.S << '\n';
    out << "C = " << cfg.C << '\n';
    out << "R = " << cfg.R << '\n';
    out << "k = " << cfg.k << '\n';
    out << "close_period = " << format_double(cfg.close_period) << '\n';
    out << "ping_count = " << cfg.ping_count << '\n';
    out << "header_validation = " << format_double(cfg.header_validation) << '\n';
    out << "body_validation = " << format_double(cfg.body_validation) << '\n';
    out << "total_rtts = " << format_double(cfg.total_rtts) << '\n';
    out << "calibration_rounds = " << cfg.calibration_rounds << '\n';
    out << "measurement_blocks = " << cfg.measurement_blocks << '\n';
    out << "inter_block_gap = " << format_double(cfg.inter_block_gap) << '\n';
    out << "forwarding_mode = " << to_string(cfg.forwarding_mode) << '\n';
    out << "max_inbound = " << (cfg.max_inbound ? std::to_string(*cfg.max_inbound) : "none") << '\n';
    out << "intra_city_latency = " << format_double(cfg.intra_city_latency) << '\n';
    out << "seed = " << cfg.seed << '\n';
    return out.str();
}

void save_config_file(const std::string& path, const ExperimentConfig& cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigParseError("cannot write config file: " + path);
    out << format_config(cfg);
}

}  // namespace scramble
