#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "miwt/error.hpp"
#include "miwt/mesh.hpp"
#include "test_support.hpp"

using namespace miwt;
using miwt::testing::prepared;

namespace {

TriangulatedManifold parse(const std::string& text) {
    std::istringstream in(text);
    return read_off(in, "inline.off");
}

// Independent area: half the cross product of two embedded edge vectors.
double cross_area(Point3 a, Point3 b, Point3 c) {
    const double ux = b[0] - a[0], uy = b[1] - a[1], uz = b[2] - a[2];
    const double vx = c[0] - a[0], vy = c[1] - a[1], vz = c[2] - a[2];
    const double cx = uy * vz - uz * vy, cy = uz * vx - ux * vz, cz = ux * vy - uy * vx;
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

// Floyd-Warshall over the edge graph.
std::vector<std::vector<double>> floyd_warshall(const TriangulatedManifold& mesh) {
    const std::size_t n = mesh.vertex_count();
    std::vector<std::vector<double>> d(n, std::vector<double>(n, kInfinity));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
    for (const auto& e : mesh.edges()) d[e.a][e.b] = d[e.b][e.a] = std::min(d[e.a][e.b], e.length);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    return d;
}

// Two triangles sharing edge 1-3, so that 0-1-2 is the shortest path.
TriangulatedManifold bent_strip() {
    return TriangulatedManifold(4, {{0, 1, 3}, {1, 2, 3}}, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {1, 1, 0}});
}

}  // namespace

TEST_SUITE("off") {
    TEST_CASE("single triangle") {
        const auto m = parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
        CHECK(m.vertex_count() == 3);
        CHECK(m.triangle_count() == 1);
        CHECK(m.edge_count() == 3);
    }

    TEST_CASE("tetrahedron with comments and blank lines") {
        const auto m = parse(
            "OFF\n# regular tetrahedron\n4 4 6\n\n 1 1 1\n1 -1 -1\n-1 1 -1\n-1 -1 1\n"
            "3 0 1 2\n3 0 3 1  # face\n3 0 2 3\n3 1 3 2\n");
        CHECK(m.vertex_count() == 4);
        CHECK(m.triangle_count() == 4);
        CHECK(m.edge_count() == 6);
        CHECK(m.connected_component_count() == 1);
    }

    TEST_CASE("quad face is rejected") {
        CHECK_THROWS_AS(parse("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n"), InputError);
    }

    TEST_CASE("malformed input") {
        CHECK_THROWS_AS(parse("PLY\n3 1 0\n"), InputError);
        CHECK_THROWS_AS(parse("OFF\n3 1 0\n0 0 0\n1 0 0\n"), InputError);
        CHECK_THROWS_AS(parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n"), InputError);
        CHECK_THROWS_AS(parse("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 1\n"), InputError);
        CHECK_THROWS_AS(load_off("/nonexistent/mesh.off"), InputError);
    }

    TEST_CASE("write then read round trip") {
        const auto ico = build_icosphere(3, 2.5);
        std::stringstream buf;
        write_off(buf, ico);
        const auto back = read_off(buf);
        REQUIRE(back.vertex_count() == ico.vertex_count());
        REQUIRE(back.triangle_count() == ico.triangle_count());
        for (std::size_t v = 0; v < ico.vertex_count(); ++v) CHECK(back.positions()[v] == ico.positions()[v]);
        CHECK(back.triangles() == ico.triangles());
    }
}

TEST_SUITE("icosphere") {
    TEST_CASE("counts") {
        for (int n : {1, 2, 3, 5, 10}) {
            const auto m = build_icosphere(n, 1.0);
            CHECK(m.vertex_count() == static_cast<std::size_t>(10 * n * n + 2));
            CHECK(m.triangle_count() == static_cast<std::size_t>(20 * n * n));
        }
        CHECK(build_icosphere(25, 1.0).vertex_count() == 6252);
    }

    TEST_CASE("subdivision is a closed surface without duplicate vertices") {
        const auto m = build_icosphere(10, 1.0);
        // Euler characteristic of the sphere, with every edge shared by two faces.
        const auto V = static_cast<long>(m.vertex_count()), E = static_cast<long>(m.edge_count()),
                   F = static_cast<long>(m.triangle_count());
        CHECK(V - E + F == 2);
        CHECK(2 * E == 3 * F);
        auto pts = m.positions();
        std::sort(pts.begin(), pts.end());
        double min_gap = kInfinity;
        for (std::size_t i = 1; i < pts.size(); ++i) {
            const double dx = pts[i][0] - pts[i - 1][0], dy = pts[i][1] - pts[i - 1][1], dz = pts[i][2] - pts[i - 1][2];
            min_gap = std::min(min_gap, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
        CHECK(min_gap > 1e-6);
        for (const auto& p : m.positions()) CHECK(std::hypot(p[0], p[1], p[2]) == doctest::Approx(1.0).epsilon(1e-14));
    }

    TEST_CASE("order below one is rejected") { CHECK_THROWS_AS(build_icosphere(0, 1.0), std::invalid_argument); }

    TEST_CASE("total weight converges to the sphere area") {
        auto err = [](int n) {
            auto m = build_icosphere(n, 1.0);
            m.compute_weights();
            double total = 0.0;
            for (double w : m.weights()) total += w;
            return std::abs(total - 4.0 * std::numbers::pi) / (4.0 * std::numbers::pi);
        };
        CHECK(err(10) < 0.005);
        const double ratio = err(5) / err(10);
        CHECK(ratio >= 3.0);
        CHECK(ratio <= 5.0);
    }
}

TEST_SUITE("triangle_area") {
    TEST_CASE("examples") {
        CHECK(triangle_area(3, 4, 5) == doctest::Approx(6.0).epsilon(1e-15));
        CHECK(triangle_area(2, 2, 2) == doctest::Approx(cross_area({0, 0, 0}, {2, 0, 0}, {1, std::sqrt(3.0), 0})));
        CHECK(triangle_area(2, 2, 2) == doctest::Approx(1.7320508075688772).epsilon(1e-15));
        CHECK(triangle_area(1, 1, 2) == 0.0);
        CHECK(triangle_area(0, 0, 0) == 0.0);
    }

    TEST_CASE("order of sides does not matter") {
        CHECK(triangle_area(5, 3, 4) == triangle_area(3, 4, 5));
        CHECK(triangle_area(4, 5, 3) == triangle_area(3, 4, 5));
    }

    TEST_CASE("needle triangles stay accurate") {
        // Heron's naive formula loses all digits here.
        const double eps = 1e-7;
        const double l = std::sqrt(1.0 + eps * eps);
        CHECK(triangle_area(1.0, l, eps) == doctest::Approx(0.5 * eps).epsilon(1e-9));
    }

    TEST_CASE("tolerance for slightly violated triangle inequality") {
        CHECK(triangle_area(1.0, 1.0, 2.0 + 1e-12) == 0.0);
        CHECK_THROWS_AS(triangle_area(1.0, 1.0, 2.1), std::domain_error);
        CHECK_THROWS_AS(triangle_area(-1.0, 1.0, 1.0), std::domain_error);
    }

    TEST_CASE("matches the cross product on random triangles") {
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int k = 0; k < 200; ++k) {
            Point3 a{u(gen), u(gen), u(gen)}, b{u(gen), u(gen), u(gen)}, c{u(gen), u(gen), u(gen)};
            auto len = [](Point3 p, Point3 q) { return std::hypot(p[0] - q[0], p[1] - q[1], p[2] - q[2]); };
            CHECK(triangle_area(len(a, b), len(b, c), len(c, a)) ==
                  doctest::Approx(cross_area(a, b, c)).epsilon(1e-9));
        }
    }

    TEST_CASE("mesh error names the triangle") {
        TriangulatedManifold m(3, {{0, 1, 2}});
        m.set_edge_length(0, 1, 1.0);
        m.set_edge_length(1, 2, 1.0);
        m.set_edge_length(0, 2, 5.0);
        try {
            m.compute_weights();
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find("triangle 0") != std::string::npos);
        }
    }
}

TEST_SUITE("weights") {
    TEST_CASE("single triangle gets thirds") {
        auto m = miwt::testing::single_triangle();
        m.compute_weights();
        for (double w : m.weights()) CHECK(w == doctest::Approx(0.5 / 3.0).epsilon(1e-15));
    }

    TEST_CASE("unit tetrahedron") {
        auto m = miwt::testing::unit_tetrahedron();
        m.compute_weights();
        for (double w : m.weights()) CHECK(w == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-14));
    }

    TEST_CASE("conservation on a mesh with overridden edge lengths") {
        auto m = build_icosphere(4, 1.0);
        std::mt19937_64 gen(3);
        std::uniform_real_distribution<double> jitter(0.97, 1.03);
        const auto edges = m.edges();
        for (const auto& e : edges) m.set_edge_length(e.a, e.b, e.length * jitter(gen));
        m.compute_weights();
        double sum_w = 0.0, sum_a = 0.0;
        for (double w : m.weights()) sum_w += w;
        for (std::size_t t = 0; t < m.triangle_count(); ++t) sum_a += m.triangle_area(t);
        CHECK(std::abs(sum_w - sum_a) <= 1e-9 * sum_a);
        CHECK(m.total_area() == doctest::Approx(sum_a).epsilon(1e-12));
    }

    TEST_CASE("edge length changes invalidate weights") {
        auto m = miwt::testing::single_triangle();
        m.compute_weights();
        m.set_edge_length(0, 1, 1.1);
        CHECK_FALSE(m.has_weights());
        CHECK_THROWS(m.set_edge_length(0, 5, 1.0));
    }
}

TEST_SUITE("distances") {
    TEST_CASE("path through the strip") {
        auto m = bent_strip();
        m.compute_distances();
        CHECK(m.distances()(0, 2) == 2.0);
        CHECK(m.distances()(0, 3) == doctest::Approx(std::sqrt(2.0)));
        for (std::size_t x = 0; x < 4; ++x) CHECK(m.distances()(x, x) == 0.0);
    }

    TEST_CASE("restricted to a vertex subset") {
        const auto m = bent_strip();
        const std::vector<std::size_t> keep{0, 3, 2};
        const auto d = geodesic_distances(m, std::span<const std::size_t>(keep));
        REQUIRE(d.size() == 3);
        // Only 0-3 and 3-2 remain: the path must go over the apex.
        CHECK(d(0, 2) == doctest::Approx(2.0 * std::sqrt(2.0)));
        CHECK(d(0, 1) == doctest::Approx(std::sqrt(2.0)));
    }

    TEST_CASE("unit tetrahedron") {
        auto m = miwt::testing::unit_tetrahedron();
        m.compute_distances();
        const auto fw = floyd_warshall(m);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(m.distances()(i, j) == doctest::Approx(i == j ? 0.0 : 1.0).epsilon(1e-15));
                CHECK(m.distances()(i, j) == doctest::Approx(fw[i][j]).epsilon(1e-15));
            }
    }

    TEST_CASE("Dijkstra agrees with Floyd-Warshall and satisfies the metric axioms") {
        auto m = build_icosphere(4, 1.0);  // 162 vertices
        m.compute_distances(3);
        const auto fw = floyd_warshall(m);
        const auto& d = m.distances();
        const std::size_t n = m.vertex_count();
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            ok = ok && d(i, i) == 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                ok = ok && std::abs(d(i, j) - fw[i][j]) <= 1e-12 && d(i, j) == d(j, i);
                for (std::size_t k = 0; k < n; ++k) ok = ok && d(i, k) <= d(i, j) + d(j, k) + 1e-12;
            }
        }
        CHECK(ok);
    }

    TEST_CASE("thread count does not change the result") {
        auto a = build_icosphere(3, 1.0), b = a;
        a.compute_distances(1);
        b.compute_distances(4);
        CHECK(a.distances().values() == b.distances().values());
    }

    TEST_CASE("disconnected meshes give infinite cross distances") {
        TriangulatedManifold m(6, {{0, 1, 2}, {3, 4, 5}},
                               {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}});
        CHECK(m.connected_component_count() == 2);
        m.compute_distances();
        CHECK(std::isinf(m.distances()(0, 4)));
        CHECK(m.distances().checked(0, 1) == 1.0);
        CHECK_THROWS_AS(m.distances().checked(0, 4), ComputeError);
    }

    TEST_CASE("binary cache round trip") {
        const auto dir = miwt::testing::scratch_dir("mesh_cache");
        auto m = build_icosphere(2, 1.0);
        m.compute_distances();
        m.distances().save(dir / "d.bin");
        CHECK(std::filesystem::file_size(dir / "d.bin") == 8 * (1 + 42 * 42));
        const auto back = DistanceMatrix::load(dir / "d.bin");
        CHECK(back.values() == m.distances().values());

        const std::string bytes = miwt::testing::slurp(dir / "d.bin");
        std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
        CHECK_THROWS_AS(DistanceMatrix::load(dir / "short.bin"), InputError);
    }

    TEST_CASE("edge length overrides from CSV") {
        const auto dir = miwt::testing::scratch_dir("mesh_edges");
        std::ofstream(dir / "lengths.csv") << "i,j,length\n0,1,2.5\n2,1,0.75\n";
        auto m = miwt::testing::single_triangle();
        load_edge_lengths(m, dir / "lengths.csv");
        CHECK(m.edge_length(1, 0) == 2.5);
        CHECK(m.edge_length(1, 2) == 0.75);
        std::ofstream(dir / "bad.csv") << "0,9,1.0\n";
        CHECK_THROWS_AS(load_edge_lengths(m, dir / "bad.csv"), InputError);
    }
}

TEST_SUITE("ball") {
    TEST_CASE("examples") {
        auto tet = prepared(miwt::testing::unit_tetrahedron());
        CHECK(tet->ball(0, 1.5).size() == 4);
        CHECK(tet->ball(0, 0.99) == std::vector<std::size_t>{0});
        CHECK(tet->ball(2, 10.0).size() == 4);
        CHECK_THROWS(tet->ball(4, 1.0));
    }

    TEST_CASE("smallest positive distance gives only the center") {
        auto m = prepared(build_icosphere(3, 1.0));
        for (std::size_t x = 0; x < m->vertex_count(); x += 7) {
            double smallest = kInfinity;
            for (std::size_t y = 0; y < m->vertex_count(); ++y) {
                const double d = m->distances()(x, y);
                if (d > 0.0) smallest = std::min(smallest, d);
            }
            CHECK(m->ball(x, smallest) == std::vector<std::size_t>{x});
        }
    }

    TEST_CASE("monotone in the radius") {
        auto m = prepared(build_icosphere(3, 1.0));
        for (std::size_t x : {0u, 17u, 91u}) {
            std::vector<std::size_t> prev;
            for (double r = 0.05; r < 3.5; r += 0.05) {
                const auto cur = m->ball(x, r);
                CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
                CHECK(std::binary_search(cur.begin(), cur.end(), x));
                prev = cur;
            }
            CHECK(prev.size() == m->vertex_count());
        }
    }
}
