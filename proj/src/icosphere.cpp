#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

#include "miwt/mesh.hpp"

namespace miwt {

namespace {

Point3 project(const Point3& p, double radius) {
    const double len = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
    return {radius * p[0] / len, radius * p[1] / len, radius * p[2] / len};
}

}  // namespace

TriangulatedManifold build_icosphere(int order, double radius) {
    if (order < 1) throw std::invalid_argument("icosphere order must be >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("icosphere radius must be positive");

    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    const std::array<Point3, 12> corners{{
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    }};
    const std::array<Triangle, 20> faces{{
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    }};

    const auto n = static_cast<std::size_t>(order);
    std::vector<Point3> positions;
    positions.reserve(10 * n * n + 2);
    for (const auto& c : corners) positions.push_back(project(c, radius));

    // Interior points of each icosahedron edge, listed from the lower- to the
    // higher-numbered corner, so that neighbouring faces share vertex ids.
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> edge_points;
    auto edge_point = [&](std::size_t u, std::size_t v, std::size_t steps_from_u) {
        const std::size_t lo = std::min(u, v), hi = std::max(u, v);
        auto [it, inserted] = edge_points.try_emplace({lo, hi});
        if (inserted) {
            for (std::size_t t = 1; t < n; ++t) {
                const double a = static_cast<double>(n - t), b = static_cast<double>(t);
                const Point3 p{a * corners[lo][0] + b * corners[hi][0], a * corners[lo][1] + b * corners[hi][1],
                               a * corners[lo][2] + b * corners[hi][2]};
                it->second.push_back(positions.size());
                positions.push_back(project(p, radius));
            }
        }
        const std::size_t from_lo = (u == lo) ? steps_from_u : n - steps_from_u;
        return it->second[from_lo - 1];
    };

    std::vector<Triangle> triangles;
    triangles.reserve(20 * n * n);
    std::vector<std::size_t> grid;  // local (row, col) -> vertex id, row-major
    for (const auto& f : faces) {
        const std::size_t a = f[0], b = f[1], c = f[2];
        // Local point (i, j), 0 <= j <= i <= n, has barycentric weights
        // (n - i, i - j, j) on (a, b, c).
        grid.assign((n + 1) * (n + 1), 0);
        auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return grid[i * (n + 1) + j]; };
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                std::size_t id;
                if (i == 0) {
                    id = a;
                } else if (i == n && j == 0) {
                    id = b;
                } else if (i == n && j == n) {
                    id = c;
                } else if (j == 0) {
                    id = edge_point(a, b, i);
                } else if (j == i) {
                    id = edge_point(a, c, i);
                } else if (i == n) {
                    id = edge_point(b, c, j);
                } else {
                    const double wa = static_cast<double>(n - i), wb = static_cast<double>(i - j),
                                 wc = static_cast<double>(j);
                    const Point3 p{wa * corners[a][0] + wb * corners[b][0] + wc * corners[c][0],
                                   wa * corners[a][1] + wb * corners[b][1] + wc * corners[c][1],
                                   wa * corners[a][2] + wb * corners[b][2] + wc * corners[c][2]};
                    id = positions.size();
                    positions.push_back(project(p, radius));
                }
                at(i, j) = id;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
                if (j < i) triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
            }
        }
    }
    const std::size_t count = positions.size();
    return TriangulatedManifold(count, std::move(triangles), std::move(positions));
}

}  // namespace miwt
