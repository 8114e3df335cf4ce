#pragma once

#include <vector>

#include "scramble/config.hpp"
#include "scramble/latency.hpp"
#include "scramble/protocol.hpp"

namespace scramble {

// Independent first-delivery oracle for a frozen overlay: single-source
// shortest paths from the miner with edge weight
//   w(u,v) = (2 * total_rtts) * latency(u,v) + header_validation + body_validation.
// Returns offsets from generation time; +inf for unreachable nodes. This is
// a plain Dijkstra over the link graph and shares no code with the event
// simulation it is used to check.
std::vector<double> dissemination_oracle(const TopologySnapshot& topology,
                                         const LatencyModel& model, NodeId miner,
                                         const ValidatedConfig& cfg);

std::vector<double> dijkstra(const std::vector<std::vector<NodeId>>& adjacency,
                             const std::function<double(NodeId, NodeId)>& weight, NodeId source);

}  // namespace scramble
