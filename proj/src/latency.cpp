#include "scramble/latency.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scramble/rng.hpp"

namespace scramble {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const std::string text = strip(cell);
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ParseError("non-numeric latency cell at row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ": '" + text + "'");
    }
}

}  // namespace

CityMatrix parse_city_matrix(const std::string& csv_text, bool values_are_rtt) {
    std::stringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty latency matrix file");

    CityMatrix m;
    m.is_rtt_input = values_are_rtt;
    auto header = split_csv_line(line);
    if (header.size() < 2) throw ParseError("latency matrix header needs at least one city");
    for (std::size_t i = 1; i < header.size(); ++i) m.city_names.push_back(strip(header[i]));

    const std::size_t n = m.city_names.size();
    m.values.assign(n * n, 0.0);

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        if (row >= n) throw DimensionError("latency matrix has more rows than header cities");
        auto fields = split_csv_line(line);
        if (fields.size() != n + 1)
            throw DimensionError("latency matrix row " + std::to_string(row + 1) + " has " +
                                 std::to_string(fields.size() ? fields.size() - 1 : 0) +
                                 " values, expected " + std::to_string(n));
        for (std::size_t col = 0; col < n; ++col) {
            double v = parse_cell(fields[col + 1], row + 1, col + 1);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ParseError("latency values must be finite and >= 0");
            if (values_are_rtt) v *= 0.5;
            m.values[row * n + col] = v;
        }
        ++row;
    }
    if (row != n) throw DimensionError("latency matrix is not square: " + std::to_string(row) +
                                       " rows vs " + std::to_string(n) + " cities");

    // Bidirectional links: average asymmetric pairs.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double sym = 0.5 * (m.values[i * n + j] + m.values[j * n + i]);
            m.values[i * n + j] = sym;
            m.values[j * n + i] = sym;
        }
    return m;
}

CityMatrix load_city_matrix(const std::string& path, bool values_are_rtt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open latency matrix file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_city_matrix(buf.str(), values_are_rtt);
}

void write_city_matrix(const std::string& path, const CityMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write latency matrix file: " + path);
    const std::size_t n = matrix.city_count();
    for (const auto& name : matrix.city_names) out << ',' << name;
    out << '\n';
    char buf[64];
    for (std::size_t i = 0; i < n; ++i) {
        out << matrix.city_names[i];
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", matrix.at(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

Placement place_nodes(const CityMatrix& matrix, std::vector<double> weights,
                      std::uint32_t node_count, std::uint64_t seed) {
    if (weights.size() != matrix.city_count())
        throw WeightError("weights count does not match city count");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw WeightError("weights must be finite and >= 0");
        total += w;
    }
    if (total <= 0.0) throw WeightError("weights must not be all zero");
    for (double& w : weights) w /= total;

    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    cumulative.back() = 1.0;

    Placement p;
    p.weights = weights;
    p.city_of.resize(node_count);
    Rng rng(seed);
    for (std::uint32_t n = 0; n < node_count; ++n) {
        const double u = rng.next_unit();
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        p.city_of[n] = static_cast<std::uint32_t>(
            std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                     static_cast<std::ptrdiff_t>(weights.size()) - 1));
    }
    return p;
}

std::vector<double> load_city_weights(const std::string& path, const CityMatrix& matrix) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open weights file: " + path);
    std::vector<double> weights(matrix.city_count(), 0.0);
    std::vector<bool> seen(matrix.city_count(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = strip(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (lineno == 1 && stripped == "city,weight") continue;
        auto fields = split_csv_line(stripped);
        if (fields.size() != 2)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'city,weight'");
        const std::string city = strip(fields[0]);
        const auto it = std::find(matrix.city_names.begin(), matrix.city_names.end(), city);
        if (it == matrix.city_names.end())
            throw WeightError("weights file names unknown city: " + city);
        const auto idx = static_cast<std::size_t>(it - matrix.city_names.begin());
        if (seen[idx]) throw WeightError("duplicate weight for city: " + city);
        seen[idx] = true;
        weights[idx] = parse_cell(fields[1], lineno, 2);
    }
    return weights;
}

LatencyModel LatencyModel::from_trace(CityMatrix matrix, Placement placement,
                                      double intra_city_latency) {
    if (intra_city_latency <= 0.0) throw WeightError("intra_city_latency must be positive");
    LatencyModel m;
    m.kind_ = Kind::trace;
    m.node_count_ = static_cast<std::uint32_t>(placement.city_of.size());
    m.matrix_dim_ = static_cast<std::uint32_t>(matrix.city_count());
    for (std::uint32_t c : placement.city_of)
        if (c >= m.matrix_dim_) throw DimensionError("placement references city out of range");
    m.matrix_ = std::move(matrix.values);
    m.city_of_ = std::move(placement.city_of);
    m.intra_city_ = intra_city_latency;
    return m;
}

LatencyModel LatencyModel::planar(std::uint32_t node_count, double scale, double base,
                                  std::uint64_t seed) {
    std::vector<std::pair<double, double>> pts(node_count);
    Rng rng = derive_stream(seed, stream::planar_points);
    for (auto& p : pts) {
        p.first = rng.next_unit();
        p.second = rng.next_unit();
    }
    return from_points(std::move(pts), scale, base);
}

LatencyModel LatencyModel::from_points(std::vector<std::pair<double, double>> points, double scale,
                                       double base) {
    if (scale <= 0.0 || base <= 0.0) throw WeightError("planar scale and base must be positive");
    LatencyModel m;
    m.kind_ = Kind::planar;
    m.node_count_ = static_cast<std::uint32_t>(points.size());
    m.points_ = std::move(points);
    m.scale_ = scale;
    m.base_ = base;
    return m;
}

LatencyModel LatencyModel::from_matrix(std::vector<double> values, std::uint32_t node_count) {
    if (values.size() != static_cast<std::size_t>(node_count) * node_count)
        throw DimensionError("explicit latency matrix size does not match node_count^2");
    for (std::uint32_t i = 0; i < node_count; ++i)
        for (std::uint32_t j = i + 1; j < node_count; ++j) {
            const double sym = 0.5 * (values[i * node_count + j] + values[j * node_count + i]);
            if (!(sym > 0.0) || !std::isfinite(sym))
                throw ParseError("explicit latency entries must be finite and positive");
            values[i * node_count + j] = sym;
            values[j * node_count + i] = sym;
        }
    LatencyModel m;
    m.kind_ = Kind::explicit_matrix;
    m.node_count_ = node_count;
    m.matrix_dim_ = node_count;
    m.matrix_ = std::move(values);
    return m;
}

}  // namespace scramble
