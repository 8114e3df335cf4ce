#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "scramble/config.hpp"
#include "scramble/protocol.hpp"

namespace scramble {

struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-block delivery outcome. deliver_time_of holds absolute times; NaN
// marks a node that never received the block.
struct DisseminationRecord {
    BlockId block = 0;
    NodeId miner = kNoNode;
    SimTime generated_at = 0.0;
    std::vector<double> deliver_time_of;

    bool delivered(NodeId n) const { return !std::isnan(deliver_time_of[n]); }
    double offset(NodeId n) const { return deliver_time_of[n] - generated_at; }
};

// Fraction of (node, block) pairs not yet delivered, on a uniform grid of
// elapsed time. Non-increasing; the tail is the never-delivered fraction.
struct ProgressCurve {
    double grid_step = 10.0;
    std::vector<double> frac_not_delivered;  // index i <-> elapsed i*grid_step

    double at_index(std::size_t i) const { return frac_not_delivered[i]; }
};

ProgressCurve progress_curve(std::span<const DisseminationRecord> records, double grid_step = 10.0);

// Per level p: smallest elapsed time where the averaged not-delivered
// fraction drops to <= 1-p; +inf when never reached.
std::map<double, double> delivery_percentiles(std::span<const DisseminationRecord> records,
                                              std::span<const double> levels);

// Same crossing rule on a raw pool of delivery offsets (used for per-round
// calibration tracking). total_pairs = delivered + never count.
double percentile_from_offsets(std::vector<double> offsets, std::size_t never_count, double level);

struct OverlayStats {
    std::uint32_t components = 0;
    std::uint32_t degree_min = 0;
    double degree_mean = 0.0;
    std::uint32_t degree_max = 0;
    std::uint32_t isolated = 0;
};

// Component/degree statistics of the undirected (union-semantics) link graph.
OverlayStats overlay_stats(const TopologySnapshot& topology);
OverlayStats overlay_stats(const std::vector<std::vector<NodeId>>& adjacency);

}  // namespace scramble
