#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace miwt {

using Point3 = std::array<double, 3>;
using Triangle = std::array<std::size_t, 3>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Dense symmetric matrix of pairwise distances. Pairs in different
/// connected components hold +infinity.
class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::size_t n, double fill = kInfinity) : n_(n), data_(n * n, fill) {}

    std::size_t size() const { return n_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

    std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }

    /// Like operator() but throws ComputeError when i and j are not connected.
    double checked(std::size_t i, std::size_t j) const;

    /// Binary cache: little-endian uint64 vertex count, then n*n
    /// little-endian float64 values in row-major order.
    void save(const std::filesystem::path& path) const;
    static DistanceMatrix load(const std::filesystem::path& path);

    const std::vector<double>& values() const { return data_; }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Area of the flat triangle with side lengths l1, l2, l3 (Heron, in the
/// cancellation-free ordering). Violations of the triangle inequality up to
/// 1e-9 times the perimeter are treated as a degenerate triangle with area
/// 0; larger violations and negative lengths throw std::domain_error.
double triangle_area(double l1, double l2, double l3);

struct MeshEdge {
    std::size_t a;  // a < b
    std::size_t b;
    double length;
};

/// A triangulated 2-manifold component: vertices, triangles, per-edge
/// geodesic lengths, and the derived quadrature weights and graph-geodesic
/// distances.
class TriangulatedManifold {
public:
    TriangulatedManifold() = default;

    /// Edge lengths default to Euclidean lengths between `positions` when
    /// they are given; otherwise every edge length must be supplied through
    /// set_edge_length before weights or distances are computed.
    TriangulatedManifold(std::size_t vertex_count, std::vector<Triangle> triangles,
                         std::vector<Point3> positions = {});

    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t triangle_count() const { return triangles_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    bool has_positions() const { return !positions_.empty(); }
    const std::vector<Point3>& positions() const { return positions_; }
    const std::vector<Triangle>& triangles() const { return triangles_; }
    const std::vector<MeshEdge>& edges() const { return edges_; }

    /// Index into edges() of the edge {i, j}, if it exists.
    std::optional<std::size_t> find_edge(std::size_t i, std::size_t j) const;
    double edge_length(std::size_t i, std::size_t j) const;
    /// Overrides an edge length. Invalidates weights and distances.
    void set_edge_length(std::size_t i, std::size_t j, double length);

    /// Flat area A(S) of triangle t from its three edge lengths.
    double triangle_area(std::size_t t) const;
    /// Sum of A(S) over all triangles.
    double total_area() const;

    /// W(e) = (1/3) * sum of A(S) over the triangles S incident to e.
    void compute_weights();
    bool has_weights() const { return !weights_.empty(); }
    const std::vector<double>& weights() const;

    void compute_distances(unsigned threads = 1);
    /// Installs a precomputed (e.g. cached) distance matrix.
    void set_distances(DistanceMatrix distances);
    bool has_distances() const { return distances_.size() == vertex_count_ && vertex_count_ > 0; }
    const DistanceMatrix& distances() const;

    /// {e : d(center, e) < radius}, in increasing vertex order.
    std::vector<std::size_t> ball(std::size_t center, double radius) const;

    /// Per-vertex neighbour lists (vertex, edge length).
    std::vector<std::vector<std::pair<std::size_t, double>>> adjacency() const;

    std::size_t connected_component_count() const;

private:
    static std::uint64_t edge_key(std::size_t i, std::size_t j);

    std::size_t vertex_count_ = 0;
    std::vector<Point3> positions_;
    std::vector<Triangle> triangles_;
    std::vector<MeshEdge> edges_;
    std::unordered_map<std::uint64_t, std::size_t> edge_index_;
    std::vector<double> weights_;
    DistanceMatrix distances_;
};

/// All-pairs shortest paths (Dijkstra) over the edge graph. When
/// `allowed_vertices` is given, only edges between allowed vertices are
/// used and the result is indexed by position in that list.
DistanceMatrix geodesic_distances(const TriangulatedManifold& mesh,
                                  std::optional<std::span<const std::size_t>> allowed_vertices = std::nullopt,
                                  unsigned threads = 1);

/// Icosahedron with every face split into order^2 triangles, vertices
/// projected onto the sphere of the given radius. 10*order^2+2 vertices.
TriangulatedManifold build_icosphere(int order, double radius);

/// ASCII OFF, triangles only.
TriangulatedManifold read_off(std::istream& in, const std::string& source_name = "<stream>");
TriangulatedManifold load_off(const std::filesystem::path& path);
void write_off(std::ostream& out, const TriangulatedManifold& mesh);

/// Applies a CSV of `i,j,length` rows (optional header) as edge-length
/// overrides. Every (i, j) must be an existing mesh edge.
void load_edge_lengths(TriangulatedManifold& mesh, const std::filesystem::path& path);

}  // namespace miwt
