#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scramble/config.hpp"
#include "scramble/engine.hpp"
#include "scramble/latency.hpp"
#include "scramble/metrics.hpp"
#include "scramble/protocol.hpp"
#include "scramble/pss.hpp"

namespace scramble {

// Hooks for tests and debug dumps. Refresh hooks fire after the node was
// mutated; `before` carries the pre-refresh membership with its metrics.
struct SimObserver {
    virtual ~SimObserver() = default;
    virtual void on_bootstrap(const NodeState&) {}
    virtual void on_block_generated(BlockId, NodeId /*miner*/, SimTime) {}
    virtual void on_announcement(NodeId /*node*/, NodeId /*from*/, BlockId, SimTime) {}
    virtual void on_score_award(NodeId /*node*/, NodeId /*peer*/, BlockId, double /*points*/) {}
    virtual void on_delivery(NodeId /*node*/, BlockId, SimTime, NodeId /*source*/) {}
    virtual void on_scoring_refresh(const NodeState&, std::span<const ScoringPeer> /*before*/,
                                    std::span<const NodeId> /*removed*/,
                                    std::span<const NodeId> /*added*/) {}
    virtual void on_close_refresh(const NodeState&, std::span<const ClosePeer> /*before*/,
                                  std::span<const NodeId> /*removed*/,
                                  std::span<const NodeId> /*added*/,
                                  std::uint32_t /*ended_period*/) {}
};

struct SimOptions {
    bool heuristics_enabled = true;
    // When true (default), an announcement whose projected completion beats
    // the in-flight transfer supersedes it, making frozen-topology delivery
    // times equal single-source shortest paths. When false, the node commits
    // to its first announcer and later announcements are ignored for
    // transfer purposes.
    bool reroute_on_better_announcement = true;
    // Multiplicative per-message latency jitter, uniform in ±fraction.
    // Off (0.0) in all acceptance runs.
    double jitter_fraction = 0.0;
    SimObserver* observer = nullptr;
    // Optional processed-event sink (debug trace dump).
    std::function<void(const Event&)>* event_sink = nullptr;
    bool track_calibration_p90 = true;
};

// One deterministic run: owns the node states, the event loop, and all
// derived random streams. Strictly sequential; parallelism only across runs.
class Simulation {
public:
    Simulation(const ValidatedConfig& cfg, const LatencyModel& model, SimOptions options = {});

    // calibration blocks are simulated but not recorded; measurement blocks
    // fill records(). Runs until all transfers drain.
    void run_blocks(std::uint32_t calibration_blocks, std::uint32_t measurement_blocks);

    // Heuristic cycles only, no blocks; runs until the clock passes `until`.
    void run_idle(SimTime until);

    const std::vector<DisseminationRecord>& records() const { return records_; }
    // p90 delivery offset per completed calibration round (diagnostics).
    const std::vector<double>& calibration_p90() const { return calibration_p90_; }

    TopologySnapshot snapshot() const;
    const NodeState& node(NodeId n) const { return nodes_[n]; }
    std::uint32_t node_count() const { return static_cast<std::uint32_t>(nodes_.size()); }
    SimTime now() const { return sched_.now(); }
    std::uint64_t sampler_shortfalls() const { return sampler_shortfalls_; }
    std::uint64_t events_processed() const { return events_processed_; }
    // transfers superseded by a strictly better later announcement
    std::uint64_t transfer_reroutes() const { return transfer_reroutes_; }
    std::uint64_t transfers_started() const { return transfers_started_; }

private:
    void bootstrap();
    void handle(const Event& ev);
    void on_block_generated(const Event& ev);
    void on_announcement_arrival(const Event& ev);
    void on_header_validated(const Event& ev);
    void on_pull_request(const Event& ev);
    void on_pull_response(const Event& ev);
    void on_body_validated(const Event& ev);
    void on_scoring_round(const Event& ev);
    void on_close_period(const Event& ev);
    void on_ping_reply(const Event& ev);

    void deliver(NodeId n, BlockId block, SimTime at, NodeId source);
    void announce(NodeId sender, BlockId block, NodeId exclude);
    void start_chain(NodeId n, BlockId block, BlockLocal& e, NodeId from);
    void schedule_ping_cycle(NodeId n, SimTime window_start, double window_len);
    void add_scoring_link(NodeId n, NodeId peer);
    void add_close_link(NodeId n, NodeId peer, std::uint32_t joined_period);
    void drop_link(NodeId n, NodeId peer);
    double link_delay(NodeId from, NodeId to);
    bool delivered(NodeId n, BlockId block) const;
    void mark_delivered(NodeId n, BlockId block);
    bool scoring_active() const;
    bool close_active() const;

    ValidatedConfig cfg_;
    const LatencyModel& model_;
    SimOptions opts_;
    Scheduler sched_;
    SamplerView sampler_;
    std::vector<NodeState> nodes_;
    std::vector<std::vector<NodeId>> selected_by_;  // reverse links for union forwarding
    std::vector<Rng> node_rng_;
    std::vector<Rng> jitter_rng_;
    Rng miner_rng_;

    std::uint32_t total_blocks_ = 0;
    std::uint32_t record_from_ = 0;  // first recorded block id
    std::uint32_t blocks_generated_ = 0;
    std::uint64_t transfer_inflight_ = 0;
    std::vector<std::uint64_t> delivered_bits_;  // block-major bitset
    std::vector<DisseminationRecord> records_;

    std::vector<std::vector<double>> round_offsets_;  // calibration p90 tracking
    std::vector<std::uint32_t> round_never_;
    std::vector<double> calibration_p90_;

    std::uint64_t sampler_shortfalls_ = 0;
    std::uint64_t events_processed_ = 0;
    std::uint64_t transfer_reroutes_ = 0;
    std::uint64_t transfers_started_ = 0;

    // scratch for fan-out dedup
    std::vector<std::uint32_t> stamp_;
    std::uint32_t stamp_epoch_ = 0;
};

}  // namespace scramble
