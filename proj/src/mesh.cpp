#include "miwt/mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "miwt/error.hpp"
#include "miwt/io.hpp"
#include "miwt/parallel.hpp"

namespace miwt {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0x00000000000000ffULL) << 56) | ((v & 0x000000000000ff00ULL) << 40) |
            ((v & 0x0000000000ff0000ULL) << 24) | ((v & 0x00000000ff000000ULL) << 8) |
            ((v & 0x000000ff00000000ULL) >> 8) | ((v & 0x0000ff0000000000ULL) >> 24) |
            ((v & 0x00ff000000000000ULL) >> 40) | ((v & 0xff00000000000000ULL) >> 56);
    }
    return v;
}

double norm(const Point3& p) { return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]); }

double distance(const Point3& p, const Point3& q) {
    return norm({p[0] - q[0], p[1] - q[1], p[2] - q[2]});
}

}  // namespace

// ---------------------------------------------------------------------------
// DistanceMatrix
// ---------------------------------------------------------------------------

double DistanceMatrix::checked(std::size_t i, std::size_t j) const {
    const double d = (*this)(i, j);
    if (!std::isfinite(d)) {
        throw ComputeError("vertices " + std::to_string(i) + " and " + std::to_string(j) +
                           " lie in different connected components");
    }
    return d;
}

void DistanceMatrix::save(const std::filesystem::path& path) const {
    std::string bytes;
    bytes.resize(8 * (1 + data_.size()));
    auto put = [&](std::size_t slot, std::uint64_t word) {
        word = to_little_endian(word);
        std::memcpy(bytes.data() + 8 * slot, &word, 8);
    };
    put(0, n_);
    for (std::size_t k = 0; k < data_.size(); ++k) put(k + 1, std::bit_cast<std::uint64_t>(data_[k]));
    write_file_atomic(path, bytes);
}

DistanceMatrix DistanceMatrix::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open distance cache " + path.string());
    auto get = [&]() {
        std::uint64_t word = 0;
        if (!in.read(reinterpret_cast<char*>(&word), 8)) {
            throw InputError("truncated distance cache " + path.string());
        }
        return to_little_endian(word);
    };
    const std::uint64_t n = get();
    if (n > (1ULL << 20)) throw InputError("implausible vertex count in distance cache " + path.string());
    DistanceMatrix m(static_cast<std::size_t>(n));
    for (auto& v : m.data_) v = std::bit_cast<double>(get());
    if (in.peek() != std::char_traits<char>::eof()) {
        throw InputError("trailing bytes in distance cache " + path.string());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

double triangle_area(double l1, double l2, double l3) {
    if (!(l1 >= 0.0 && l2 >= 0.0 && l3 >= 0.0) || !std::isfinite(l1 + l2 + l3)) {
        throw std::domain_error("triangle side lengths must be finite and nonnegative");
    }
    std::array<double, 3> s{l1, l2, l3};
    std::sort(s.begin(), s.end(), std::greater<>());
    const double a = s[0], b = s[1], c = s[2];
    const double excess = a - (b + c);
    if (excess > 1e-9 * (a + b + c)) {
        throw std::domain_error("side lengths violate the triangle inequality");
    }
    if (excess >= 0.0) return 0.0;
    const double product = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    return 0.25 * std::sqrt(std::max(0.0, product));
}

// ---------------------------------------------------------------------------
// TriangulatedManifold
// ---------------------------------------------------------------------------

std::uint64_t TriangulatedManifold::edge_key(std::size_t i, std::size_t j) {
    if (i > j) std::swap(i, j);
    return (static_cast<std::uint64_t>(i) << 32) | static_cast<std::uint64_t>(j);
}

TriangulatedManifold::TriangulatedManifold(std::size_t vertex_count, std::vector<Triangle> triangles,
                                           std::vector<Point3> positions)
    : vertex_count_(vertex_count), positions_(std::move(positions)), triangles_(std::move(triangles)) {
    if (vertex_count_ >= (1ULL << 32)) throw std::invalid_argument("too many vertices");
    if (!positions_.empty() && positions_.size() != vertex_count_) {
        throw std::invalid_argument("position count does not match vertex count");
    }
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const auto& tri = triangles_[t];
        for (std::size_t v : tri) {
            if (v >= vertex_count_) {
                throw std::invalid_argument("triangle " + std::to_string(t) + " references vertex " +
                                            std::to_string(v) + " out of range");
            }
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
            throw std::invalid_argument("triangle " + std::to_string(t) + " repeats a vertex");
        }
        for (int k = 0; k < 3; ++k) {
            const std::size_t i = tri[k], j = tri[(k + 1) % 3];
            auto [it, inserted] = edge_index_.try_emplace(edge_key(i, j), edges_.size());
            if (inserted) {
                const double len = positions_.empty() ? std::nan("") : distance(positions_[i], positions_[j]);
                edges_.push_back({std::min(i, j), std::max(i, j), len});
            }
        }
    }
}

std::optional<std::size_t> TriangulatedManifold::find_edge(std::size_t i, std::size_t j) const {
    auto it = edge_index_.find(edge_key(i, j));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
}

double TriangulatedManifold::edge_length(std::size_t i, std::size_t j) const {
    auto e = find_edge(i, j);
    if (!e) throw std::out_of_range("no edge between " + std::to_string(i) + " and " + std::to_string(j));
    return edges_[*e].length;
}

void TriangulatedManifold::set_edge_length(std::size_t i, std::size_t j, double length) {
    auto e = find_edge(i, j);
    if (!e) throw std::out_of_range("no edge between " + std::to_string(i) + " and " + std::to_string(j));
    if (!(length >= 0.0) || !std::isfinite(length)) {
        throw std::invalid_argument("edge length must be finite and nonnegative");
    }
    edges_[*e].length = length;
    weights_.clear();
    distances_ = DistanceMatrix();
}

double TriangulatedManifold::triangle_area(std::size_t t) const {
    const auto& tri = triangles_.at(t);
    const double l1 = edge_length(tri[0], tri[1]);
    const double l2 = edge_length(tri[1], tri[2]);
    const double l3 = edge_length(tri[2], tri[0]);
    if (std::isnan(l1) || std::isnan(l2) || std::isnan(l3)) {
        throw std::logic_error("triangle " + std::to_string(t) + " has an unset edge length");
    }
    try {
        return miwt::triangle_area(l1, l2, l3);
    } catch (const std::domain_error& e) {
        throw InputError("triangle " + std::to_string(t) + " (" + std::to_string(tri[0]) + ", " +
                         std::to_string(tri[1]) + ", " + std::to_string(tri[2]) + "): " + e.what());
    }
}

double TriangulatedManifold::total_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) total += triangle_area(t);
    return total;
}

void TriangulatedManifold::compute_weights() {
    std::vector<double> w(vertex_count_, 0.0);
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        const double third = triangle_area(t) / 3.0;
        for (std::size_t v : triangles_[t]) w[v] += third;
    }
    weights_ = std::move(w);
}

const std::vector<double>& TriangulatedManifold::weights() const {
    if (!has_weights()) throw std::logic_error("mesh weights have not been computed");
    return weights_;
}

void TriangulatedManifold::compute_distances(unsigned threads) {
    distances_ = geodesic_distances(*this, std::nullopt, threads);
}

void TriangulatedManifold::set_distances(DistanceMatrix distances) {
    if (distances.size() != vertex_count_) {
        throw InputError("distance matrix has " + std::to_string(distances.size()) + " vertices, mesh has " +
                         std::to_string(vertex_count_));
    }
    distances_ = std::move(distances);
}

const DistanceMatrix& TriangulatedManifold::distances() const {
    if (!has_distances()) throw std::logic_error("mesh distances have not been computed");
    return distances_;
}

std::vector<std::size_t> TriangulatedManifold::ball(std::size_t center, double radius) const {
    if (center >= vertex_count_) throw std::out_of_range("ball center " + std::to_string(center) + " out of range");
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const auto row = distances().row(center);
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < row.size(); ++e) {
        if (row[e] < radius) out.push_back(e);
    }
    return out;
}

std::vector<std::vector<std::pair<std::size_t, double>>> TriangulatedManifold::adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(vertex_count_);
    for (const auto& e : edges_) {
        adj[e.a].emplace_back(e.b, e.length);
        adj[e.b].emplace_back(e.a, e.length);
    }
    return adj;
}

std::size_t TriangulatedManifold::connected_component_count() const {
    std::vector<std::size_t> parent(vertex_count_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::size_t components = vertex_count_;
    for (const auto& e : edges_) {
        const std::size_t ra = find(e.a), rb = find(e.b);
        if (ra != rb) {
            parent[ra] = rb;
            --components;
        }
    }
    return components;
}

// ---------------------------------------------------------------------------
// Dijkstra
// ---------------------------------------------------------------------------

DistanceMatrix geodesic_distances(const TriangulatedManifold& mesh,
                                  std::optional<std::span<const std::size_t>> allowed_vertices, unsigned threads) {
    const std::size_t nv = mesh.vertex_count();
    std::vector<std::size_t> local_of(nv, SIZE_MAX);
    std::vector<std::size_t> vertices;
    if (allowed_vertices) {
        vertices.assign(allowed_vertices->begin(), allowed_vertices->end());
        for (std::size_t k = 0; k < vertices.size(); ++k) {
            const std::size_t v = vertices[k];
            if (v >= nv) throw std::out_of_range("allowed vertex " + std::to_string(v) + " out of range");
            if (local_of[v] != SIZE_MAX) throw std::invalid_argument("allowed vertex list repeats " + std::to_string(v));
            local_of[v] = k;
        }
    } else {
        vertices.resize(nv);
        std::iota(vertices.begin(), vertices.end(), std::size_t{0});
        std::iota(local_of.begin(), local_of.end(), std::size_t{0});
    }
    const std::size_t n = vertices.size();

    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : mesh.edges()) {
        if (std::isnan(e.length)) throw std::logic_error("mesh has unset edge lengths");
        const std::size_t a = local_of[e.a], b = local_of[e.b];
        if (a == SIZE_MAX || b == SIZE_MAX) continue;
        adj[a].emplace_back(b, e.length);
        adj[b].emplace_back(a, e.length);
    }

    DistanceMatrix out(n);
    using Item = std::pair<double, std::size_t>;
    parallel_for(n, threads, [&](unsigned, std::size_t source) {
        auto dist = out.row(source);
        std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
        dist[source] = 0.0;
        heap.emplace(0.0, source);
        while (!heap.empty()) {
            const auto [d, u] = heap.top();
            heap.pop();
            if (d > dist[u]) continue;
            for (const auto& [v, len] : adj[u]) {
                const double nd = d + len;
                if (nd < dist[v]) {
                    dist[v] = nd;
                    heap.emplace(nd, v);
                }
            }
        }
    });
    // Dijkstra sums paths in opposite directions; force exact symmetry.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = std::min(out(i, j), out(j, i));
            out(i, j) = out(j, i) = d;
        }
    }
    return out;
}

}  // namespace miwt
