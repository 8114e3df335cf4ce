#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scramble/config.hpp"

namespace scramble {

enum class BlockStage : std::uint8_t { Unseen, HeaderReceived, HeaderValid, Pulling, Delivered };

const char* to_string(BlockStage stage);

// Per-node transfer and scoring bookkeeping for one block.
struct BlockLocal {
    BlockStage stage = BlockStage::Unseen;
    std::uint32_t chain = 0;   // serial of the live transfer chain; stale events are dropped
    NodeId source = kNoNode;   // announcer the body is being fetched from
    double projected = std::numeric_limits<double>::infinity();  // completion of live chain
    std::uint8_t pull_round = 0;  // highest pull round reached

    // Scoring window: 0 = untouched, 1 = window open, 2 = settled.
    std::uint8_t score_state = 0;
    NodeId window_peer = kNoNode;
    double window_t1 = 0.0;
};

struct ScoringPeer {
    NodeId peer;
    double score = 0.0;  // cumulative msec-points this round
};

struct ClosePeer {
    NodeId peer;
    double rtt_sum = 0.0;
    std::uint32_t rtt_count = 0;
    std::uint32_t joined_period = 0;

    double average_rtt() const {
        return rtt_count ? rtt_sum / rtt_count : std::numeric_limits<double>::infinity();
    }
};

// Small table keyed by block id; a handful of blocks are live at a time, so
// linear scans beat hashing here. Entries for old delivered blocks are
// garbage-collected by the simulation.
class BlockTable {
public:
    BlockLocal* find(BlockId block) {
        for (auto& e : entries_)
            if (e.first == block) return &e.second;
        return nullptr;
    }
    BlockLocal& get_or_insert(BlockId block) {
        if (BlockLocal* e = find(block)) return *e;
        entries_.emplace_back(block, BlockLocal{});
        return entries_.back().second;
    }
    void collect_before(BlockId cutoff) {
        std::erase_if(entries_, [cutoff](const auto& e) {
            return e.first < cutoff && e.second.stage == BlockStage::Delivered &&
                   e.second.score_state != 1;
        });
    }
    void settle_open_windows() {
        for (auto& e : entries_)
            if (e.second.score_state == 1) e.second.score_state = 2;
    }
    std::size_t size() const { return entries_.size(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::vector<std::pair<BlockId, BlockLocal>> entries_;
};

struct NodeState {
    NodeId id = kNoNode;
    std::vector<ScoringPeer> scoring;
    std::vector<ClosePeer> close;
    BlockTable blocks;
    std::uint32_t blocks_this_round = 0;   // delivered blocks counted toward k
    std::uint32_t close_period = 0;        // current close-period serial
    std::uint32_t scoring_round = 0;       // completed scoring rounds

    bool in_scoring(NodeId peer) const {
        for (const auto& p : scoring)
            if (p.peer == peer) return true;
        return false;
    }
    bool in_close(NodeId peer) const {
        for (const auto& p : close)
            if (p.peer == peer) return true;
        return false;
    }
    ClosePeer* find_close(NodeId peer) {
        for (auto& p : close)
            if (p.peer == peer) return &p;
        return nullptr;
    }
};

struct ScoreAward {
    NodeId peer;
    double points;
};

// The t1/t2 window rule of the scoring heuristic, applied to one
// announcement receipt. Returns an award when this receipt closes a window.
// Receipts from outside the scoring set never touch the window.
std::optional<ScoreAward> apply_scoring_receipt(BlockLocal& entry, bool from_in_scoring_set,
                                                NodeId from, double now);

// Rank-and-cut shared by both heuristics: sort by (metric asc, id asc), keep
// the first `retain`, drop the rest except indices marked exempt.
struct RankCutResult {
    std::vector<NodeId> retained;
    std::vector<NodeId> removed;
};
RankCutResult rank_and_cut(std::span<const NodeId> peers, std::span<const double> metric,
                           const std::vector<bool>& exempt, std::uint32_t retain);

// Overlay snapshot: one row per selected link.
enum class PeerSet : std::uint8_t { scoring, close };

struct TopologyEntry {
    NodeId node;
    PeerSet set;
    NodeId peer;
    double metric;                // current score / average rtt at snapshot time
    std::uint32_t joined_period;  // close set only; 0 for scoring entries
};

struct TopologySnapshot {
    std::uint32_t node_count = 0;
    ForwardingMode mode = ForwardingMode::undirected;
    std::vector<TopologyEntry> entries;
};

// Forwarding neighbors of `n`: in undirected mode every peer either side
// selected; in directed mode only n's own selections. Sorted, no self.
std::vector<NodeId> neighbor_union(const TopologySnapshot& topology, NodeId n);

// Adjacency lists under union (bidirectional) semantics regardless of mode;
// `keep` filters which selected links count (used for greedy-view analyses).
std::vector<std::vector<NodeId>> union_adjacency(
    const TopologySnapshot& topology,
    const std::function<bool(const TopologyEntry&)>& keep = nullptr);

}  // namespace scramble
