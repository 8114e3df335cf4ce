// Experiment driver for the SCRamble overlay simulator: single runs,
// parameter-triangle sweeps, synthetic latency generation, record analysis,
// and the frozen-topology shortest-path check.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "scramble/experiment.hpp"
#include "scramble/oracle.hpp"

namespace fs = std::filesystem;
using namespace scramble;

namespace {

const std::vector<std::string> kConfigKeys = {
    "node_count",       "S",
    "C",                "R",
    "k",                "close_period",
    "ping_count",       "header_validation",
    "body_validation",  "total_rtts",
    "calibration_rounds", "measurement_blocks",
    "inter_block_gap",  "forwarding_mode",
    "max_inbound",      "intra_city_latency",
    "seed",
};

struct ConfigCli {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "key = value config file");
        for (const auto& key : kConfigKeys) {
            app.add_option_function<std::string>(
                "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
                "override config key '" + key + "'");
        }
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        for (const auto& [key, value] : overrides) apply_config_line(cfg, key, value);
        return cfg;
    }
};

struct LatencyCli {
    std::string trace_path;
    std::string weights_path;
    std::string matrix_path;
    bool synthetic = false;
    bool trace_is_one_way = false;
    double planar_scale = 100.0;
    double planar_base = 5.0;

    void attach(CLI::App& app) {
        app.add_option("--trace", trace_path, "city latency matrix CSV (RTT values)");
        app.add_flag("--trace-one-way", trace_is_one_way,
                     "trace holds one-way latencies instead of RTTs");
        app.add_option("--weights", weights_path, "city,weight CSV for node placement");
        app.add_option("--matrix", matrix_path, "explicit per-node one-way matrix CSV");
        app.add_flag("--synthetic", synthetic, "planar synthetic latencies in the unit square");
        app.add_option("--planar-scale", planar_scale, "synthetic msec per unit distance");
        app.add_option("--planar-base", planar_base, "synthetic msec floor");
    }

    LatencySource resolve() const {
        const int chosen = (!trace_path.empty()) + (!matrix_path.empty()) + synthetic;
        if (chosen > 1)
            throw CLI::ValidationError("latency", "pick one of --trace, --matrix, --synthetic");
        if (!trace_path.empty()) {
            TraceSource source;
            source.matrix = load_city_matrix(trace_path, !trace_is_one_way);
            if (!weights_path.empty()) {
                source.weights = load_city_weights(weights_path, source.matrix);
            } else {
                source.weights.assign(source.matrix.city_count(), 1.0);
            }
            return source;
        }
        if (!matrix_path.empty()) {
            CityMatrix m = load_city_matrix(matrix_path, false);
            return MatrixSource{std::move(m.values)};
        }
        return PlanarSource{planar_scale, planar_base};
    }
};

// CSV sink for per-node state at refresh boundaries.
class StateDumpObserver : public SimObserver {
public:
    explicit StateDumpObserver(const std::string& path) : out_(path, std::ios::binary) {
        out_ << "round,node,set,peer,metric\n";
    }
    bool ok() const { return static_cast<bool>(out_); }

    void on_scoring_refresh(const NodeState& node, std::span<const ScoringPeer> before,
                            std::span<const NodeId>, std::span<const NodeId>) override {
        for (const auto& p : before)
            row(node.scoring_round, node.id, "scoring", p.peer, p.score);
    }
    void on_close_refresh(const NodeState& node, std::span<const ClosePeer> before,
                          std::span<const NodeId>, std::span<const NodeId>,
                          std::uint32_t ended) override {
        for (const auto& p : before) row(ended, node.id, "close", p.peer, p.average_rtt());
    }

private:
    void row(std::uint32_t round, NodeId node, const char* set, NodeId peer, double metric) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g", metric);
        out_ << round << ',' << node << ',' << set << ',' << peer << ',' << buf << '\n';
    }
    std::ofstream out_;
};

void print_summary_line(const std::string& label, const std::map<double, double>& pct,
                        std::uint32_t components) {
    std::printf("%-12s p50=%-10.6g p90=%-10.6g p99=%-10.6g p100=%-10.6g components=%u\n",
                label.c_str(), pct.at(0.5), pct.at(0.9), pct.at(0.99), pct.at(1.0), components);
}

int cmd_run(const ConfigCli& config_cli, const LatencyCli& latency_cli,
            const std::string& out_dir, const std::string& state_dump,
            const std::string& event_trace) {
    const ValidatedConfig cfg = validate_config(config_cli.resolve());
    const LatencySource source = latency_cli.resolve();

    SimOptions options;
    std::optional<StateDumpObserver> dump;
    if (!state_dump.empty()) {
        dump.emplace(state_dump);
        if (!dump->ok()) throw std::runtime_error("cannot write state dump: " + state_dump);
        options.observer = &*dump;
    }
    std::ofstream trace_out;
    std::function<void(const Event&)> sink;
    if (!event_trace.empty()) {
        trace_out.open(event_trace, std::ios::binary);
        if (!trace_out) throw std::runtime_error("cannot write event trace: " + event_trace);
        trace_out << "time_msec,seq,kind,args\n";
        sink = [&trace_out](const Event& ev) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.9g", ev.at);
            trace_out << buf << ',' << ev.seq << ',' << to_string(ev.kind) << ",block=" << ev.block
                      << ";from=" << static_cast<std::int64_t>(ev.from)
                      << ";to=" << static_cast<std::int64_t>(ev.to) << ";round=" << int(ev.round)
                      << ";tag=" << ev.tag << '\n';
        };
        options.event_sink = &sink;
    }

    const ExperimentResult result = run_experiment(cfg, source, options);
    write_run_outputs(out_dir, result);

    const std::vector<double> levels = {0.5, 0.9, 0.99, 1.0};
    const auto pct = delivery_percentiles(result.records, levels);
    print_summary_line(config_label(cfg->S, cfg->C, cfg->R), pct, result.stats.components);
    if (!result.calibration_p90.empty()) {
        std::printf("calibration p90 per round:");
        for (double v : result.calibration_p90) std::printf(" %.6g", v);
        std::printf("\n");
    }
    std::printf("events=%llu outputs=%s\n",
                static_cast<unsigned long long>(result.events_processed), out_dir.c_str());
    return 0;
}

std::vector<Scenario> parse_scenarios(const std::string& text) {
    if (text == "default") return default_scenarios();
    if (text == "main") return {default_scenarios().front()};
    std::vector<Scenario> out;
    std::stringstream ss(text);
    std::string name;
    while (std::getline(ss, name, ',')) {
        double bv = 0.0, rtt = 0.0;
        if (std::sscanf(name.c_str(), "bv%lf_rtt%lf", &bv, &rtt) != 2)
            throw CLI::ValidationError("scenarios",
                                       "expected 'default', 'main', or bv<msec>_rtt<count>[,..]");
        out.push_back({name, bv, rtt});
    }
    if (out.empty()) throw CLI::ValidationError("scenarios", "no scenarios given");
    return out;
}

int cmd_sweep(const ConfigCli& config_cli, const LatencyCli& latency_cli,
              const std::string& out_dir, const std::string& grid_name,
              const std::string& scenarios_text, std::uint32_t total_degree, unsigned jobs) {
    SweepSpec spec;
    spec.total_degree = total_degree;
    if (grid_name == "headline") spec.grid = headline_grid(total_degree);
    else if (grid_name == "triangle") spec.grid = triangle_grid(total_degree);
    else if (grid_name == "edge-scoring") spec.grid = edge_grid(total_degree, true);
    else if (grid_name == "edge-close") spec.grid = edge_grid(total_degree, false);
    else throw CLI::ValidationError("grid", "one of headline, triangle, edge-scoring, edge-close");
    spec.scenarios = parse_scenarios(scenarios_text);

    const ExperimentConfig base = config_cli.resolve();
    const LatencySource source = latency_cli.resolve();

    const auto outcomes = run_sweep(spec, base, source, out_dir, jobs);
    int failures = 0;
    for (const auto& o : outcomes) {
        const std::string label = config_label(o.point[0], o.point[1], o.point[2]);
        if (o.ok) {
            std::printf("[%s] ", o.scenario.c_str());
            print_summary_line(label, o.percentiles, o.components);
        } else {
            ++failures;
            std::printf("[%s] %-12s FAILED: %s\n", o.scenario.c_str(), label.c_str(),
                        o.error.c_str());
        }
    }
    std::printf("%zu points, %d failed, outputs=%s\n", outcomes.size(), failures, out_dir.c_str());
    return failures == 0 ? 0 : 1;
}

int cmd_gen_latency(std::uint32_t node_count, double scale, double base, std::uint64_t seed,
                    const std::string& out_path) {
    const LatencyModel model = gen_planar(node_count, scale, base, seed);
    CityMatrix matrix;
    matrix.city_names.reserve(node_count);
    for (std::uint32_t i = 0; i < node_count; ++i) matrix.city_names.push_back("n" + std::to_string(i));
    matrix.values.assign(static_cast<std::size_t>(node_count) * node_count, 0.0);
    for (std::uint32_t i = 0; i < node_count; ++i)
        for (std::uint32_t j = 0; j < node_count; ++j)
            if (i != j) matrix.values[i * node_count + j] = model.latency(i, j);
    write_city_matrix(out_path, matrix);
    std::printf("wrote %ux%u one-way matrix to %s\n", node_count, node_count, out_path.c_str());
    return 0;
}

int cmd_analyze(const std::string& records_path, const std::string& config_path,
                const std::string& out_dir, double grid_step) {
    const ExperimentConfig cfg = load_config_file(config_path);
    const auto records = load_records_csv(records_path, cfg.node_count);
    if (records.empty()) throw EmptyInput("records file holds no rows");

    fs::create_directories(out_dir);
    const std::string label = config_label(cfg.S, cfg.C, cfg.R);
    write_curve_csv((fs::path(out_dir) / (label + ".csv")).string(),
                    progress_curve(records, grid_step));
    const std::vector<double> levels = {0.5, 0.9, 0.99, 1.0};
    const auto pct = delivery_percentiles(records, levels);
    const std::string labels[] = {label};
    const std::map<double, double> pcts[] = {pct};
    const std::uint32_t comps[] = {0};
    write_summary_csv((fs::path(out_dir) / "summary.csv").string(), labels, pcts, comps);
    print_summary_line(label, pct, 0);
    return 0;
}

int cmd_oracle(const ConfigCli& config_cli, const LatencyCli& latency_cli, std::uint32_t blocks) {
    ExperimentConfig raw = config_cli.resolve();
    raw.calibration_rounds = 0;
    raw.measurement_blocks = blocks;
    const ValidatedConfig cfg = validate_config(raw);
    const LatencyModel model = build_latency_model(cfg, latency_cli.resolve());

    SimOptions options;
    options.heuristics_enabled = false;  // frozen bootstrap overlay
    Simulation sim(cfg, model, options);
    sim.run_blocks(0, blocks);
    const TopologySnapshot topo = sim.snapshot();
    const OverlayStats stats = overlay_stats(topo);

    double max_diff = 0.0;
    std::uint64_t compared = 0;
    bool reachability_ok = true;
    for (const auto& rec : sim.records()) {
        const auto dist = dissemination_oracle(topo, model, rec.miner, cfg);
        for (NodeId n = 0; n < cfg->node_count; ++n) {
            if (std::isinf(dist[n])) {
                reachability_ok = reachability_ok && !rec.delivered(n);
                continue;
            }
            if (!rec.delivered(n)) {
                reachability_ok = false;
                continue;
            }
            max_diff = std::max(max_diff, std::abs(rec.offset(n) - dist[n]));
            ++compared;
        }
    }
    const bool pass = reachability_ok && max_diff <= 1e-9;
    std::printf("oracle: blocks=%u nodes=%u components=%u compared=%llu max_abs_diff=%.3g %s\n",
                blocks, cfg->node_count, stats.components,
                static_cast<unsigned long long>(compared), max_diff, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SCRamble block-dissemination overlay simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "simulate one configuration");
    ConfigCli run_cfg;
    LatencyCli run_lat;
    std::string run_out = "out/run";
    std::string run_state_dump, run_event_trace;
    run_cfg.attach(*run);
    run_lat.attach(*run);
    run->add_option("--out-dir", run_out, "output directory");
    run->add_option("--state-dump", run_state_dump, "CSV of per-node state at refresh boundaries");
    run->add_option("--event-trace", run_event_trace, "CSV dump of every processed event");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a grid of S-C-R points across scenarios");
    ConfigCli sweep_cfg;
    LatencyCli sweep_lat;
    std::string sweep_out = "out/sweep";
    std::string sweep_grid = "headline";
    std::string sweep_scenarios = "default";
    std::uint32_t sweep_degree = 8;
    unsigned sweep_jobs = 1;
    sweep_cfg.attach(*sweep);
    sweep_lat.attach(*sweep);
    sweep->add_option("--out-dir", sweep_out, "output directory");
    sweep->add_option("--grid", sweep_grid, "headline | triangle | edge-scoring | edge-close");
    sweep->add_option("--scenarios", sweep_scenarios, "default | main | bv<msec>_rtt<count>[,..]");
    sweep->add_option("--D", sweep_degree, "total links per node");
    sweep->add_option("--jobs", sweep_jobs, "concurrent sweep points");

    // gen-latency
    auto* gen = app.add_subcommand("gen-latency", "write a synthetic planar latency matrix");
    std::uint32_t gen_nodes = 500;
    double gen_scale = 100.0, gen_base = 5.0;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "planar_matrix.csv";
    gen->add_option("--node_count", gen_nodes, "matrix size");
    gen->add_option("--scale", gen_scale, "msec per unit distance");
    gen->add_option("--base", gen_base, "msec floor");
    gen->add_option("--seed", gen_seed, "point placement seed");
    gen->add_option("--out", gen_out, "output CSV path");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "records CSV -> curve and summary");
    std::string an_records, an_config, an_out = "out/analyze";
    double an_step = 10.0;
    analyze->add_option("--records", an_records, "records.csv from a run")->required();
    analyze->add_option("--config", an_config, "config.txt echoed by the run")->required();
    analyze->add_option("--out-dir", an_out, "output directory");
    analyze->add_option("--grid-step", an_step, "curve grid step, msec");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "frozen-topology shortest-path delivery check");
    ConfigCli oracle_cfg;
    LatencyCli oracle_lat;
    std::uint32_t oracle_blocks = 5;
    oracle_cfg.attach(*oracle);
    oracle_lat.attach(*oracle);
    oracle->add_option("--blocks", oracle_blocks, "blocks to check");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_cfg, run_lat, run_out, run_state_dump, run_event_trace);
        if (sweep->parsed())
            return cmd_sweep(sweep_cfg, sweep_lat, sweep_out, sweep_grid, sweep_scenarios,
                             sweep_degree, sweep_jobs);
        if (gen->parsed()) return cmd_gen_latency(gen_nodes, gen_scale, gen_base, gen_seed, gen_out);
        if (analyze->parsed()) return cmd_analyze(an_records, an_config, an_out, an_step);
        if (oracle->parsed()) return cmd_oracle(oracle_cfg, oracle_lat, oracle_blocks);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
