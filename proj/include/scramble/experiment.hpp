#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "scramble/config.hpp"
#include "scramble/latency.hpp"
#include "scramble/metrics.hpp"
#include "scramble/simulation.hpp"

namespace scramble {

// Where one run's latencies come from. Placement / planar points are drawn
// from the run's own seed, so a recorded seed reproduces the run exactly.
struct TraceSource {
    CityMatrix matrix;
    std::vector<double> weights;  // per-city; normalized at placement time
};
struct PlanarSource {
    double scale = 100.0;  // msec per unit distance
    double base = 5.0;     // msec floor
};
struct MatrixSource {
    std::vector<double> values;  // node_count^2 one-way msec
};
using LatencySource = std::variant<TraceSource, PlanarSource, MatrixSource>;

LatencyModel build_latency_model(const ValidatedConfig& cfg, const LatencySource& source);

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<DisseminationRecord> records;
    TopologySnapshot final_topology;
    OverlayStats stats;
    std::vector<double> calibration_p90;
    std::uint64_t events_processed = 0;
    std::uint64_t sampler_shortfalls = 0;
};

// calibration_rounds * k warm-up blocks (discarded) + measurement_blocks
// recorded blocks, uniformly random miners, heuristics active throughout.
ExperimentResult run_experiment(const ValidatedConfig& cfg, const LatencySource& source,
                                SimOptions options = {});
ExperimentResult run_experiment(const ValidatedConfig& cfg, const LatencyModel& model,
                                SimOptions options = {});

// ---- sweep orchestration ----

struct Scenario {
    std::string name;
    double body_validation = 50.0;
    double total_rtts = 1.5;
};

struct SweepSpec {
    std::uint32_t total_degree = 8;
    std::vector<std::array<std::uint32_t, 3>> grid;  // (S, C, R), each summing to total_degree
    std::vector<Scenario> scenarios;
};

// The configurations reported in the headline comparison (requires D = 8).
std::vector<std::array<std::uint32_t, 3>> headline_grid(std::uint32_t total_degree);
// Scoring or close edge of the parameter triangle: heuristic links 0..D-1.
std::vector<std::array<std::uint32_t, 3>> edge_grid(std::uint32_t total_degree, bool scoring_edge);
// Every valid (S, C, R) with S+C+R = D.
std::vector<std::array<std::uint32_t, 3>> triangle_grid(std::uint32_t total_degree);

// Default: body validation 50/20/100 at 1.5 RTTs, plus 0.5 and 3.5 RTTs at 50.
std::vector<Scenario> default_scenarios();

std::string config_label(std::uint32_t S, std::uint32_t C, std::uint32_t R);

struct SweepPointOutcome {
    std::string scenario;
    std::array<std::uint32_t, 3> point;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::map<double, double> percentiles;
    std::uint32_t components = 0;
};

// One run per (scenario, grid point), written under out_dir/<scenario>/.
// Failures are reported per point; remaining points still execute.
std::vector<SweepPointOutcome> run_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                                         const LatencySource& source, const std::string& out_dir,
                                         unsigned jobs = 1);

// ---- run output files ----

// Writes config.txt, records.csv, topology.csv, <label>.csv (progress curve)
// and summary.csv into `dir`. Deterministic byte-for-byte for a given result.
void write_run_outputs(const std::string& dir, const ExperimentResult& result,
                       double grid_step = 10.0);

std::vector<DisseminationRecord> load_records_csv(const std::string& path,
                                                  std::uint32_t node_count);
void write_records_csv(const std::string& path, std::span<const DisseminationRecord> records,
                       std::uint32_t node_count);
void write_curve_csv(const std::string& path, const ProgressCurve& curve);
void write_topology_csv(const std::string& path, const TopologySnapshot& topology);
void write_summary_csv(const std::string& path, std::span<const std::string> labels,
                       std::span<const std::map<double, double>> percentiles,
                       std::span<const std::uint32_t> components);

}  // namespace scramble
