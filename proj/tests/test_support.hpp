#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "miwt/mesh.hpp"

namespace miwt::testing {

/// Regular tetrahedron with unit edges.
inline TriangulatedManifold unit_tetrahedron() {
    const double s = 1.0 / std::sqrt(8.0);
    std::vector<Point3> p{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
    return TriangulatedManifold(4, {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}}, p);
}

inline std::shared_ptr<TriangulatedManifold> prepared(TriangulatedManifold mesh) {
    auto m = std::make_shared<TriangulatedManifold>(std::move(mesh));
    m->compute_weights();
    m->compute_distances();
    return m;
}

/// Octahedron with vertices on the unit sphere axes.
inline TriangulatedManifold octahedron() {
    std::vector<Point3> p{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    return TriangulatedManifold(6,
                                {{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}},
                                p);
}

inline TriangulatedManifold single_triangle() {
    return TriangulatedManifold(3, {{0, 1, 2}}, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("miwt_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace miwt::testing
