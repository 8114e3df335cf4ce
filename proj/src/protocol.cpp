#include "scramble/protocol.hpp"

#include <algorithm>
#include <numeric>

namespace scramble {

const char* to_string(BlockStage stage) {
    switch (stage) {
        case BlockStage::Unseen: return "Unseen";
        case BlockStage::HeaderReceived: return "HeaderReceived";
        case BlockStage::HeaderValid: return "HeaderValid";
        case BlockStage::Pulling: return "Pulling";
        case BlockStage::Delivered: return "Delivered";
    }
    return "Unknown";
}

std::optional<ScoreAward> apply_scoring_receipt(BlockLocal& entry, bool from_in_scoring_set,
                                                NodeId from, double now) {
    if (!from_in_scoring_set || entry.score_state == 2) return std::nullopt;
    if (entry.score_state == 0) {
        entry.score_state = 1;
        entry.window_peer = from;
        entry.window_t1 = now;
        return std::nullopt;
    }
    // Window open: a receipt from a different scoring peer closes it.
    if (from == entry.window_peer) return std::nullopt;
    entry.score_state = 2;
    return ScoreAward{entry.window_peer, now - entry.window_t1};
}

RankCutResult rank_and_cut(std::span<const NodeId> peers, std::span<const double> metric,
                           const std::vector<bool>& exempt, std::uint32_t retain) {
    std::vector<std::size_t> order(peers.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (metric[a] != metric[b]) return metric[a] < metric[b];
        return peers[a] < peers[b];
    });

    RankCutResult result;
    std::uint32_t kept = 0;
    std::vector<std::size_t> cut;
    for (std::size_t idx : order) {
        if (kept < retain) {
            result.retained.push_back(peers[idx]);
            ++kept;
        } else {
            cut.push_back(idx);
        }
    }
    for (std::size_t idx : cut) {
        if (!exempt.empty() && exempt[idx]) {
            result.retained.push_back(peers[idx]);
        } else {
            result.removed.push_back(peers[idx]);
        }
    }
    return result;
}

std::vector<NodeId> neighbor_union(const TopologySnapshot& topology, NodeId n) {
    std::vector<NodeId> out;
    for (const auto& e : topology.entries) {
        if (e.node == n && e.peer != n) out.push_back(e.peer);
        if (topology.mode == ForwardingMode::undirected && e.peer == n && e.node != n)
            out.push_back(e.node);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::vector<NodeId>> union_adjacency(
    const TopologySnapshot& topology, const std::function<bool(const TopologyEntry&)>& keep) {
    std::vector<std::vector<NodeId>> adj(topology.node_count);
    for (const auto& e : topology.entries) {
        if (keep && !keep(e)) continue;
        if (e.node == e.peer) continue;
        adj[e.node].push_back(e.peer);
        adj[e.peer].push_back(e.node);
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return adj;
}

}  // namespace scramble
