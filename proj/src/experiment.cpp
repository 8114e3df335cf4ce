#include "scramble/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "scramble/oracle.hpp"
#include "scramble/rng.hpp"

namespace scramble {

namespace fs = std::filesystem;

LatencyModel build_latency_model(const ValidatedConfig& cfg, const LatencySource& source) {
    if (const auto* trace = std::get_if<TraceSource>(&source)) {
        Placement placement = place_nodes(trace->matrix, trace->weights, cfg->node_count,
                                          derive_seed(cfg->seed, stream::placement));
        return LatencyModel::from_trace(trace->matrix, std::move(placement),
                                        cfg->intra_city_latency);
    }
    if (const auto* planar = std::get_if<PlanarSource>(&source)) {
        return LatencyModel::planar(cfg->node_count, planar->scale, planar->base, cfg->seed);
    }
    const auto& matrix = std::get<MatrixSource>(source);
    return LatencyModel::from_matrix(matrix.values, cfg->node_count);
}

ExperimentResult run_experiment(const ValidatedConfig& cfg, const LatencyModel& model,
                                SimOptions options) {
    Simulation sim(cfg, model, options);
    sim.run_blocks(cfg->calibration_rounds * cfg->k, cfg->measurement_blocks);

    ExperimentResult result;
    result.config = cfg.get();
    result.records = sim.records();
    result.final_topology = sim.snapshot();
    result.stats = overlay_stats(result.final_topology);
    result.calibration_p90 = sim.calibration_p90();
    result.events_processed = sim.events_processed();
    result.sampler_shortfalls = sim.sampler_shortfalls();
    return result;
}

ExperimentResult run_experiment(const ValidatedConfig& cfg, const LatencySource& source,
                                SimOptions options) {
    const LatencyModel model = build_latency_model(cfg, source);
    return run_experiment(cfg, model, options);
}

std::string config_label(std::uint32_t S, std::uint32_t C, std::uint32_t R) {
    return "S" + std::to_string(S) + "-C" + std::to_string(C) + "-R" + std::to_string(R);
}

std::vector<std::array<std::uint32_t, 3>> headline_grid(std::uint32_t total_degree) {
    if (total_degree != 8)
        throw std::invalid_argument("headline grid is defined for total degree 8");
    return {{0, 0, 8}, {4, 0, 4}, {0, 4, 4}, {7, 0, 1}, {0, 7, 1}, {1, 1, 6}, {3, 3, 2}};
}

std::vector<std::array<std::uint32_t, 3>> edge_grid(std::uint32_t total_degree, bool scoring_edge) {
    std::vector<std::array<std::uint32_t, 3>> grid;
    for (std::uint32_t h = 0; h < total_degree; ++h) {
        const std::uint32_t r = total_degree - h;
        if (h == 0 && r % 2 != 0) continue;  // S0-C0 needs an even split
        grid.push_back(scoring_edge ? std::array<std::uint32_t, 3>{h, 0, r}
                                    : std::array<std::uint32_t, 3>{0, h, r});
    }
    return grid;
}

namespace {

bool valid_point(std::uint32_t s, std::uint32_t c, std::uint32_t r) {
    if (s + c + r < 1) return false;
    if (s + c > 0 && r == 0) return false;
    const bool split = (s > 0 && c > 0) || (s == 0 && c == 0);
    return !split || r % 2 == 0;
}

}  // namespace

std::vector<std::array<std::uint32_t, 3>> triangle_grid(std::uint32_t total_degree) {
    std::vector<std::array<std::uint32_t, 3>> grid;
    for (std::uint32_t s = 0; s <= total_degree; ++s)
        for (std::uint32_t c = 0; s + c <= total_degree; ++c) {
            const std::uint32_t r = total_degree - s - c;
            if (valid_point(s, c, r)) grid.push_back({s, c, r});
        }
    return grid;
}

std::vector<Scenario> default_scenarios() {
    return {
        {"bv50_rtt1.5", 50.0, 1.5},
        {"bv20_rtt1.5", 20.0, 1.5},
        {"bv100_rtt1.5", 100.0, 1.5},
        {"bv50_rtt0.5", 50.0, 0.5},
        {"bv50_rtt3.5", 50.0, 3.5},
    };
}

namespace {

std::string format_g(double v, const char* fmt = "%.9g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

constexpr std::array<double, 4> kSummaryLevels = {0.5, 0.9, 0.99, 1.0};

}  // namespace

void write_records_csv(const std::string& path, std::span<const DisseminationRecord> records,
                       std::uint32_t node_count) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write records file: " + path);
    out << "block,miner,generated_at_msec,node,deliver_msec\n";
    for (const auto& rec : records) {
        for (std::uint32_t n = 0; n < node_count; ++n) {
            if (!rec.delivered(n)) continue;
            out << rec.block << ',' << rec.miner << ',' << format_g(rec.generated_at, "%.17g")
                << ',' << n << ',' << format_g(rec.deliver_time_of[n], "%.17g") << '\n';
        }
    }
}

std::vector<DisseminationRecord> load_records_csv(const std::string& path,
                                                  std::uint32_t node_count) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open records file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty records file: " + path);

    std::map<BlockId, DisseminationRecord> by_block;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::uint32_t block = 0, miner = 0, node = 0;
        double generated = 0.0, delivered = 0.0;
        if (std::sscanf(line.c_str(), "%u,%u,%lf,%u,%lf", &block, &miner, &generated, &node,
                        &delivered) != 5)
            throw ParseError(path + ":" + std::to_string(lineno) + ": malformed record row");
        auto [it, fresh] = by_block.try_emplace(block);
        if (fresh) {
            it->second.block = block;
            it->second.miner = miner;
            it->second.generated_at = generated;
            it->second.deliver_time_of.assign(node_count,
                                              std::numeric_limits<double>::quiet_NaN());
        }
        if (node >= node_count)
            throw ParseError(path + ":" + std::to_string(lineno) + ": node id out of range");
        it->second.deliver_time_of[node] = delivered;
    }
    std::vector<DisseminationRecord> records;
    records.reserve(by_block.size());
    for (auto& [block, rec] : by_block) records.push_back(std::move(rec));
    return records;
}

void write_curve_csv(const std::string& path, const ProgressCurve& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write curve file: " + path);
    out << "elapsed_msec,frac_not_delivered\n";
    for (std::size_t i = 0; i < curve.frac_not_delivered.size(); ++i) {
        out << format_g(static_cast<double>(i) * curve.grid_step) << ','
            << format_g(curve.frac_not_delivered[i]) << '\n';
    }
}

void write_topology_csv(const std::string& path, const TopologySnapshot& topology) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write topology file: " + path);
    out << "node,set,peer,metric,joined_period\n";
    for (const auto& e : topology.entries) {
        out << e.node << ',' << (e.set == PeerSet::scoring ? "scoring" : "close") << ',' << e.peer
            << ',' << format_g(e.metric) << ',' << e.joined_period << '\n';
    }
}

void write_summary_csv(const std::string& path, std::span<const std::string> labels,
                       std::span<const std::map<double, double>> percentiles,
                       std::span<const std::uint32_t> components) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write summary file: " + path);
    out << "config,p50_msec,p90_msec,p99_msec,p100_msec,components_final\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out << labels[i];
        for (double level : kSummaryLevels) {
            const auto it = percentiles[i].find(level);
            out << ',' << format_g(it == percentiles[i].end()
                                       ? std::numeric_limits<double>::quiet_NaN()
                                       : it->second);
        }
        out << ',' << components[i] << '\n';
    }
}

void write_run_outputs(const std::string& dir, const ExperimentResult& result, double grid_step) {
    fs::create_directories(dir);
    const std::string label = config_label(result.config.S, result.config.C, result.config.R);

    save_config_file((fs::path(dir) / "config.txt").string(), result.config);
    write_records_csv((fs::path(dir) / "records.csv").string(), result.records,
                      result.config.node_count);
    write_topology_csv((fs::path(dir) / "topology.csv").string(), result.final_topology);
    write_curve_csv((fs::path(dir) / (label + ".csv")).string(),
                    progress_curve(result.records, grid_step));

    const std::vector<double> levels(kSummaryLevels.begin(), kSummaryLevels.end());
    const auto pct = delivery_percentiles(result.records, levels);
    const std::string labels[] = {label};
    const std::map<double, double> pcts[] = {pct};
    const std::uint32_t comps[] = {result.stats.components};
    write_summary_csv((fs::path(dir) / "summary.csv").string(), labels, pcts, comps);
}

std::vector<SweepPointOutcome> run_sweep(const SweepSpec& spec, const ExperimentConfig& base,
                                         const LatencySource& source, const std::string& out_dir,
                                         unsigned jobs) {
    struct Task {
        std::size_t scenario;
        std::size_t point;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < spec.scenarios.size(); ++s)
        for (std::size_t p = 0; p < spec.grid.size(); ++p) tasks.push_back({s, p});

    std::vector<SweepPointOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const auto [si, pi] = tasks[i];
            const Scenario& scenario = spec.scenarios[si];
            const auto [s, c, r] = spec.grid[pi];

            SweepPointOutcome& outcome = outcomes[i];
            outcome.scenario = scenario.name;
            outcome.point = {s, c, r};
            try {
                ExperimentConfig cfg = base;
                cfg.S = s;
                cfg.C = c;
                cfg.R = r;
                cfg.body_validation = scenario.body_validation;
                cfg.total_rtts = scenario.total_rtts;
                cfg.seed = derive_seed(base.seed, stream::sweep_point, si * 4096 + pi);
                outcome.seed = cfg.seed;

                const ValidatedConfig validated = validate_config(cfg);
                SimOptions options;
                options.track_calibration_p90 = false;
                ExperimentResult result = run_experiment(validated, source, options);

                const fs::path scenario_dir = fs::path(out_dir) / scenario.name;
                const std::string label = config_label(s, c, r);
                write_run_outputs((scenario_dir / label).string(), result);
                // Sweep-level curve file, one per point, next to the point dirs.
                write_curve_csv((scenario_dir / (label + ".csv")).string(),
                                progress_curve(result.records));

                const std::vector<double> levels(kSummaryLevels.begin(), kSummaryLevels.end());
                outcome.percentiles = delivery_percentiles(result.records, levels);
                outcome.components = result.stats.components;
                outcome.ok = true;
            } catch (const std::exception& e) {
                outcome.ok = false;
                outcome.error = e.what();
            }
        }
    };

    const unsigned n_threads = std::max(1u, jobs);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // Per-scenario summary over the points that succeeded, in grid order.
    for (std::size_t s = 0; s < spec.scenarios.size(); ++s) {
        std::vector<std::string> labels;
        std::vector<std::map<double, double>> pcts;
        std::vector<std::uint32_t> comps;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].scenario != s || !outcomes[i].ok) continue;
            labels.push_back(config_label(outcomes[i].point[0], outcomes[i].point[1],
                                          outcomes[i].point[2]));
            pcts.push_back(outcomes[i].percentiles);
            comps.push_back(outcomes[i].components);
        }
        if (!labels.empty()) {
            const fs::path scenario_dir = fs::path(out_dir) / spec.scenarios[s].name;
            fs::create_directories(scenario_dir);
            write_summary_csv((scenario_dir / "summary.csv").string(), labels, pcts, comps);
        }
    }
    return outcomes;
}

}  // namespace scramble
