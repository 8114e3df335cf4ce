#include "scramble/metrics.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace scramble {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pools finite delivery offsets and the never-delivered count over all
// records. Offsets come back sorted.
struct OffsetPool {
    std::vector<double> offsets;
    std::size_t never = 0;
    std::size_t pairs = 0;
};

OffsetPool pool_offsets(std::span<const DisseminationRecord> records) {
    if (records.empty()) throw EmptyInput("no dissemination records");
    OffsetPool pool;
    for (const auto& rec : records) {
        pool.pairs += rec.deliver_time_of.size();
        for (std::size_t n = 0; n < rec.deliver_time_of.size(); ++n) {
            if (rec.delivered(static_cast<NodeId>(n)))
                pool.offsets.push_back(rec.offset(static_cast<NodeId>(n)));
            else
                ++pool.never;
        }
    }
    std::sort(pool.offsets.begin(), pool.offsets.end());
    return pool;
}

// Count of offsets strictly greater than t in a sorted vector.
std::size_t count_greater(const std::vector<double>& sorted, double t) {
    return sorted.size() -
           (std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

}  // namespace

ProgressCurve progress_curve(std::span<const DisseminationRecord> records, double grid_step) {
    if (grid_step <= 0.0) throw EmptyInput("grid_step must be positive");
    OffsetPool pool = pool_offsets(records);

    ProgressCurve curve;
    curve.grid_step = grid_step;
    const double max_offset = pool.offsets.empty() ? 0.0 : pool.offsets.back();
    const auto last_index = static_cast<std::size_t>(std::ceil(max_offset / grid_step));
    curve.frac_not_delivered.reserve(last_index + 1);
    const double total = static_cast<double>(pool.pairs);
    for (std::size_t i = 0; i <= last_index; ++i) {
        const double t = static_cast<double>(i) * grid_step;
        curve.frac_not_delivered.push_back(
            (count_greater(pool.offsets, t) + pool.never) / total);
    }
    return curve;
}

double percentile_from_offsets(std::vector<double> offsets, std::size_t never_count,
                               double level) {
    if (!(level > 0.0) || level > 1.0)
        throw std::invalid_argument("percentile level must be in (0, 1]");
    std::sort(offsets.begin(), offsets.end());
    const double total = static_cast<double>(offsets.size() + never_count);
    if (total == 0.0) throw EmptyInput("no delivery outcomes");
    const double target = (1.0 - level) * total;

    auto not_delivered_at = [&](double t) {
        return static_cast<double>(count_greater(offsets, t) + never_count);
    };
    if (not_delivered_at(0.0) <= target) return 0.0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (i + 1 < offsets.size() && offsets[i + 1] == offsets[i]) continue;
        if (not_delivered_at(offsets[i]) <= target) return offsets[i];
    }
    return kInf;
}

std::map<double, double> delivery_percentiles(std::span<const DisseminationRecord> records,
                                              std::span<const double> levels) {
    OffsetPool pool = pool_offsets(records);
    std::map<double, double> out;
    for (double level : levels)
        out[level] = percentile_from_offsets(pool.offsets, pool.never, level);
    return out;
}

OverlayStats overlay_stats(const std::vector<std::vector<NodeId>>& adjacency) {
    OverlayStats stats;
    const std::size_t n = adjacency.size();
    if (n == 0) return stats;

    std::size_t degree_total = 0;
    stats.degree_min = std::numeric_limits<std::uint32_t>::max();
    for (const auto& neighbors : adjacency) {
        const auto d = static_cast<std::uint32_t>(neighbors.size());
        degree_total += d;
        stats.degree_min = std::min(stats.degree_min, d);
        stats.degree_max = std::max(stats.degree_max, d);
        if (d == 0) ++stats.isolated;
    }
    stats.degree_mean = static_cast<double>(degree_total) / static_cast<double>(n);

    std::vector<char> seen(n, 0);
    std::vector<NodeId> frontier;
    for (NodeId start = 0; start < n; ++start) {
        if (seen[start]) continue;
        ++stats.components;
        frontier.assign(1, start);
        seen[start] = 1;
        while (!frontier.empty()) {
            const NodeId v = frontier.back();
            frontier.pop_back();
            for (NodeId w : adjacency[v]) {
                if (!seen[w]) {
                    seen[w] = 1;
                    frontier.push_back(w);
                }
            }
        }
    }
    return stats;
}

OverlayStats overlay_stats(const TopologySnapshot& topology) {
    return overlay_stats(union_adjacency(topology));
}

}  // namespace scramble
