#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "scramble/config.hpp"

namespace scramble {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct WeightError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SelfLatency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Square one-way latency matrix between named cities, msec.
struct CityMatrix {
    std::vector<std::string> city_names;
    std::vector<double> values;  // row-major, city_count x city_count
    bool is_rtt_input = false;   // source file stored round trips

    std::size_t city_count() const { return city_names.size(); }
    double at(std::size_t i, std::size_t j) const { return values[i * city_names.size() + j]; }
};

// CSV: header `,name1,name2,...`, then `nameI,v1,v2,...` rows (msec).
// RTT inputs are halved to one-way; asymmetric entries are averaged.
CityMatrix load_city_matrix(const std::string& path, bool values_are_rtt);
CityMatrix parse_city_matrix(const std::string& csv_text, bool values_are_rtt);
void write_city_matrix(const std::string& path, const CityMatrix& matrix);

struct Placement {
    std::vector<std::uint32_t> city_of;  // NodeId -> city index
    std::vector<double> weights;         // normalized sampling weights
};

Placement place_nodes(const CityMatrix& matrix, std::vector<double> weights,
                      std::uint32_t node_count, std::uint64_t seed);

// Weights CSV: `city,weight` lines; city names must match the matrix.
std::vector<double> load_city_weights(const std::string& path, const CityMatrix& matrix);

// One-way latency provider. Immutable after construction; symmetric; > 0 for
// distinct nodes.
class LatencyModel {
public:
    enum class Kind { trace, planar, explicit_matrix };

    static LatencyModel from_trace(CityMatrix matrix, Placement placement, double intra_city_latency);
    // Nodes uniform in the unit square; latency = euclidean distance * scale + base.
    static LatencyModel planar(std::uint32_t node_count, double scale, double base, std::uint64_t seed);
    static LatencyModel from_points(std::vector<std::pair<double, double>> points, double scale, double base);
    // Per-node matrix; symmetrized as (m+m^T)/2. values is node_count^2 one-way msec.
    static LatencyModel from_matrix(std::vector<double> values, std::uint32_t node_count);

    Kind kind() const { return kind_; }
    std::uint32_t node_count() const { return node_count_; }

    double latency(NodeId u, NodeId v) const {
        if (u == v) throw SelfLatency("latency requested for a node to itself");
        switch (kind_) {
            case Kind::trace: {
                const std::uint32_t cu = city_of_[u];
                const std::uint32_t cv = city_of_[v];
                if (cu == cv) return intra_city_;
                return matrix_[cu * matrix_dim_ + cv];
            }
            case Kind::planar: {
                const double dx = points_[u].first - points_[v].first;
                const double dy = points_[u].second - points_[v].second;
                return std::sqrt(dx * dx + dy * dy) * scale_ + base_;
            }
            case Kind::explicit_matrix:
            default:
                return matrix_[u * matrix_dim_ + v];
        }
    }

    const std::vector<std::pair<double, double>>& points() const { return points_; }
    const std::vector<std::uint32_t>& city_of() const { return city_of_; }

private:
    LatencyModel() = default;

    Kind kind_ = Kind::explicit_matrix;
    std::uint32_t node_count_ = 0;
    std::uint32_t matrix_dim_ = 0;
    std::vector<double> matrix_;                       // trace: city x city, explicit: node x node
    std::vector<std::uint32_t> city_of_;               // trace only
    std::vector<std::pair<double, double>> points_;    // planar only
    double scale_ = 0.0;
    double base_ = 0.0;
    double intra_city_ = 0.0;
};

inline LatencyModel gen_planar(std::uint32_t node_count, double scale, double base, std::uint64_t seed) {
    return LatencyModel::planar(node_count, scale, base, seed);
}

}  // namespace scramble
