#include "scramble/oracle.hpp"

#include <limits>
#include <queue>

namespace scramble {

std::vector<double> dijkstra(const std::vector<std::vector<NodeId>>& adjacency,
                             const std::function<double(NodeId, NodeId)>& weight, NodeId source) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(adjacency.size(), kInf);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> frontier;
    dist[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        const auto [d, u] = frontier.top();
        frontier.pop();
        if (d > dist[u]) continue;
        for (NodeId v : adjacency[u]) {
            const double cand = d + weight(u, v);
            if (cand < dist[v]) {
                dist[v] = cand;
                frontier.emplace(cand, v);
            }
        }
    }
    return dist;
}

std::vector<double> dissemination_oracle(const TopologySnapshot& topology,
                                         const LatencyModel& model, NodeId miner,
                                         const ValidatedConfig& cfg) {
    std::vector<std::vector<NodeId>> adjacency;
    if (cfg->forwarding_mode == ForwardingMode::undirected) {
        adjacency = union_adjacency(topology);
    } else {
        adjacency.resize(topology.node_count);
        for (const auto& e : topology.entries)
            if (e.node != e.peer) adjacency[e.node].push_back(e.peer);
    }
    const double hop_overhead = cfg->header_validation + cfg->body_validation;
    const double rtt_factor = 2.0 * cfg->total_rtts;
    return dijkstra(adjacency,
                    [&](NodeId u, NodeId v) { return rtt_factor * model.latency(u, v) + hop_overhead; },
                    miner);
}

}  // namespace scramble
