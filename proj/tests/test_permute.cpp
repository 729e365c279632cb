#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "miwt/error.hpp"
#include "miwt/permute.hpp"
#include "miwt/random.hpp"
#include "test_support.hpp"

using namespace miwt;
using miwt::testing::prepared;

namespace {

SignalMatrix gaussian(std::size_t n, std::size_t m, std::uint64_t seed, double shift_second_half = 0.0) {
    Rng rng(seed);
    SignalMatrix s(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) s(i, j) = rng.normal() + (i >= n / 2 ? shift_second_half : 0.0);
    return s;
}

std::vector<int> halves(std::size_t n) {
    std::vector<int> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = i < n / 2 ? 0 : 1;
    return g;
}

bool on_grid(double p, std::size_t B) {
    const double k = p * static_cast<double>(B + 1);
    return std::abs(k - std::round(k)) < 1e-9 && k >= 1.0 - 1e-9 && k <= B + 1 + 1e-9;
}

// (m0 - m1)^2 / (sp^2 (1/n0 + 1/n1)) written out longhand.
double oracle_t2(const std::vector<double>& y, const std::vector<int>& g) {
    double s0 = 0, s1 = 0, n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < y.size(); ++i) (g[i] ? s1 : s0) += y[i], (g[i] ? n1 : n0) += 1;
    const double m0 = s0 / n0, m1 = s1 / n1;
    double ss = 0;
    for (std::size_t i = 0; i < y.size(); ++i) ss += std::pow(y[i] - (g[i] ? m1 : m0), 2);
    const double sp2 = ss / (n0 + n1 - 2);
    return (m0 - m1) * (m0 - m1) / (sp2 * (1 / n0 + 1 / n1));
}

}  // namespace

TEST_SUITE("permute_once") {
    TEST_CASE("identity returns the input exactly") {
        const auto s = gaussian(6, 5, 1);
        DesignSpec d;
        d.covariates = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
        const auto plan = make_plan(d, HypothesisSpec::last_coefficient(d, StatisticKind::slope_sq), 10, 1);
        const std::vector<std::size_t> id{0, 1, 2, 3, 4, 5};
        CHECK(permute_once(s, plan, id) == s);
    }

    TEST_CASE("intercept-only null preserves column means") {
        const auto s = gaussian(8, 3, 2);
        const auto d = DesignSpec::two_sample(halves(8));
        const auto plan = make_plan(d, HypothesisSpec::last_coefficient(d, StatisticKind::t_two_sample_sq), 10, 1);
        const Permuter permuter(s, plan);
        for (std::size_t b = 0; b < 10; ++b) {
            const auto out = permuter.apply(plan.order(b, 8));
            for (int j = 0; j < 3; ++j) CHECK(out.col(j).mean() == doctest::Approx(s.col(j).mean()).epsilon(1e-13));
        }
    }

    TEST_CASE("reversal of a four-point column") {
        SignalMatrix y(4, 1);
        y << 1.0, 4.0, 2.0, 9.5;
        const auto d = DesignSpec::two_sample({0, 0, 1, 1});
        const auto plan = make_plan(d, HypothesisSpec::last_coefficient(d, StatisticKind::t_two_sample_sq), 1, 0);
        const std::vector<std::size_t> rev{3, 2, 1, 0};
        const auto out = permute_once(y, plan, rev);
        const double mean = (1.0 + 4.0 + 2.0 + 9.5) / 4.0;
        for (int i = 0; i < 4; ++i) CHECK(out(i, 0) == doctest::Approx(mean + (y(3 - i, 0) - mean)).epsilon(1e-15));
    }

    TEST_CASE("Freedman-Lane with a nuisance covariate") {
        // y = Z gamma + e with Z = [1, z]; permuting residuals of the reduced fit.
        DesignSpec d;
        d.covariates.resize(6, 2);
        d.covariates << 0.1, 1, 0.5, 0, 0.9, 1, 1.3, 0, 2.0, 1, 2.2, 0;
        const auto h = HypothesisSpec::last_coefficient(d, StatisticKind::slope_sq);
        const auto plan = make_plan(d, h, 5, 3);
        REQUIRE(plan.null_design.cols() == 2);
        const auto s = gaussian(6, 2, 8);
        const std::vector<std::size_t> order{2, 0, 1, 5, 3, 4};
        const auto out = permute_once(s, plan, order);
        Eigen::MatrixXd z(6, 2);
        z.col(0).setOnes();
        z.col(1) = d.covariates.col(0);
        const Eigen::MatrixXd fit = z * (z.transpose() * z).ldlt().solve(z.transpose() * s);
        const Eigen::MatrixXd res = s - fit;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 2; ++j) CHECK(out(i, j) == doctest::Approx(fit(i, j) + res(order[i], j)).epsilon(1e-12));
    }

    TEST_CASE("invalid permutations") {
        const auto d = DesignSpec::two_sample({0, 0, 1, 1});
        const auto plan = make_plan(d, HypothesisSpec::last_coefficient(d, StatisticKind::t_two_sample_sq), 1, 0);
        const auto s = gaussian(4, 2, 1);
        CHECK_THROWS(permute_once(s, plan, std::vector<std::size_t>{0, 1, 1, 3}));
        CHECK_THROWS(permute_once(s, plan, std::vector<std::size_t>{0, 1, 2}));
    }
}

TEST_SUITE("plans") {
    TEST_CASE("random orders are reproducible permutations") {
        PermutationPlan plan;
        plan.seed = 77;
        std::set<std::vector<std::size_t>> seen;
        for (std::size_t b = 0; b < 50; ++b) {
            auto o = plan.order(b, 9);
            CHECK(o == plan.order(b, 9));
            seen.insert(o);
            std::sort(o.begin(), o.end());
            for (std::size_t i = 0; i < 9; ++i) CHECK(o[i] == i);
        }
        CHECK(seen.size() == 50);
    }

    TEST_CASE("validation") {
        DesignSpec d;
        d.covariates = Eigen::VectorXd::LinSpaced(6, 0.0, 1.0);
        const auto h = HypothesisSpec::last_coefficient(d, StatisticKind::t_trend_cutoff);
        CHECK_THROWS_AS(make_plan(d, h, 10, 0, PermutationScheme::raw_label_permutation), InputError);
        CHECK_THROWS_AS(make_plan(d, h, 0, 0), InputError);
        CHECK(scheme_from_string("raw_label_permutation") == PermutationScheme::raw_label_permutation);
        CHECK_THROWS_AS(scheme_from_string("manly"), InputError);
    }
}

TEST_SUITE("integration") {
    TEST_CASE("constant and singleton fields") {
        const auto ico = prepared(build_icosphere(2, 1.0));
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.7)});
        const auto fam = enumerate_family(d);
        const std::vector<double> three(d.size(), 3.0);
        for (std::size_t i = 0; i < fam.size(); i += 5) {
            const auto ball = fam.ball(d, i);
            CHECK(integrated_stat(three, ball) == doctest::Approx(3.0 * ball_weight(ball)));
            if (ball.support.size() == 1) {
                const std::size_t g = ball.support[0];
                std::vector<double> spike(d.size(), 0.0);
                spike[g] = 2.5;
                CHECK(integrated_stat(spike, ball) == doctest::Approx(2.5 * d.weight(g)));
            }
        }
    }

    TEST_CASE("Fubini recursion against a nested double sum") {
        const auto tet = prepared(miwt::testing::unit_tetrahedron());
        const ProductDomain d({ComponentGrid::from_mesh(tet, kInfinity), ComponentGrid::circle(6, 6.0, kInfinity)});
        const auto fam = enumerate_family(d);
        Rng rng(5);
        std::vector<double> field(d.size());
        for (double& v : field) v = rng.uniform() * 10.0;
        FamilyIntegrator integrator(d, fam);
        const auto fast = integrator.integrate(field);
        REQUIRE(fast.size() == fam.size());
        for (std::size_t i = 0; i < fam.size(); ++i) {
            const auto parts = fam.unravel(i);
            double nested = 0.0;
            for (std::size_t x : fam.component(0).support(parts[0])) {
                double inner = 0.0;
                for (std::size_t y : fam.component(1).support(parts[1]))
                    inner += d.component(1).weights()[y] * field[x * 6 + y];
                nested += d.component(0).weights()[x] * inner;
            }
            CHECK(std::abs(fast[i] - nested) <= 1e-12 * std::abs(nested));
            CHECK(integrated_stat(field, fam.ball(d, i)) == doctest::Approx(nested).epsilon(1e-12));
        }
    }

    TEST_CASE("three components") {
        const ProductDomain d({ComponentGrid::interval(4, 0.0, 1.0, 0.4), ComponentGrid::circle(5, 5.0, 1.6),
                               ComponentGrid::interval(3, 0.0, 2.0, kInfinity)});
        const auto fam = enumerate_family(d);
        Rng rng(6);
        std::vector<double> field(d.size());
        for (double& v : field) v = rng.uniform();
        FamilyIntegrator integrator(d, fam);
        std::vector<double> fast;
        integrator.integrate(field, fast);
        for (std::size_t i = 0; i < fam.size(); ++i) {
            CHECK(fast[i] == doctest::Approx(integrated_stat(field, fam.ball(d, i))).epsilon(1e-12));
        }
    }

    TEST_CASE("max over covering balls against brute force") {
        const auto ico = prepared(build_icosphere(2, 1.0));
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.9), ComponentGrid::circle(4, 4.0, kInfinity)});
        const auto fam = enumerate_family(d);
        Rng rng(8);
        std::vector<double> values(fam.size());
        for (double& v : values) v = rng.uniform();
        std::vector<double> brute(d.size(), -1.0);
        for (std::size_t i = 0; i < fam.size(); ++i)
            for (std::size_t g : fam.ball(d, i).support) brute[g] = std::max(brute[g], values[i]);
        CHECK(max_over_covering_balls<double>(d, fam, values) == brute);
    }
}

namespace {
const auto ico = prepared(build_icosphere(2, 1.0));
}  // namespace

TEST_SUITE("p-values") {

    TEST_CASE("extreme and tied permuted statistics") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.6)});
        const auto fam = enumerate_family(d);
        const std::vector<double> obs(d.size(), 5.0);
        FamilyIntegrator integ(d, fam);
        const auto obs_balls = integ.integrate(obs);
        const std::vector<double> low(d.size(), 1.0);
        const auto low_balls = integ.integrate(low);
        const auto below = pvalues(obs, obs_balls, {low, low, low}, {low_balls, low_balls, low_balls}, d, fam);
        for (double p : below.pointwise) CHECK(p == 0.25);
        for (double p : below.ballwise) CHECK(p == 0.25);
        for (double p : below.adjusted) CHECK(p == 0.25);
        const auto tied = pvalues(obs, obs_balls, {obs, obs}, {obs_balls, obs_balls}, d, fam);
        for (double p : tied.pointwise) CHECK(p == 1.0);
        for (double p : tied.adjusted) CHECK(p == 1.0);
    }

    TEST_CASE("a family holding only the full domain") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, kInfinity)});
        std::vector<std::uint32_t> all(d.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
        ComponentBall whole;
        whole.size = d.size();
        whole.reach = 10.0;
        const AdjustmentFamily fam({ComponentBalls({all}, {whole})});
        REQUIRE(fam.size() == 1);

        const auto s = gaussian(10, d.size(), 3, 0.4);
        const auto design = DesignSpec::two_sample(halves(10));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        const auto null = null_distribution(s, design, h, d, fam, make_plan(design, h, 99, 4));
        const auto p = pvalues(null, d, fam);
        for (double v : p.adjusted) CHECK(v == p.ballwise[0]);
    }

    TEST_CASE("one forced identity replicate") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.6)});
        const auto fam = enumerate_family(d);
        const auto s = gaussian(8, d.size(), 9, 1.0);
        const auto design = DesignSpec::two_sample(halves(8));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        auto plan = make_plan(design, h, 1, 0);
        plan.explicit_orders = {{0, 1, 2, 3, 4, 5, 6, 7}};
        const auto null = null_distribution(s, design, h, d, fam, plan, {1, true});
        CHECK(null.permuted_fields[0] == null.observed_field);
        CHECK(null.permuted_balls[0] == null.observed_balls);
        const auto p = pvalues(null, d, fam);
        for (double v : p.pointwise) CHECK(v == 1.0);
        for (double v : p.ballwise) CHECK(v == 1.0);
    }

    TEST_CASE("swapping the groups leaves the field unchanged") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.6)});
        const auto s = gaussian(8, d.size(), 10, 0.7);
        const auto a = DesignSpec::two_sample({0, 0, 0, 0, 1, 1, 1, 1});
        const auto b = DesignSpec::two_sample({1, 1, 1, 1, 0, 0, 0, 0});
        const auto fa = stat_field(s, a, HypothesisSpec::last_coefficient(a, StatisticKind::t_two_sample_sq));
        const auto fb = stat_field(s, b, HypothesisSpec::last_coefficient(b, StatisticKind::t_two_sample_sq));
        for (std::size_t g = 0; g < fa.size(); ++g) CHECK(fa[g] == doctest::Approx(fb[g]).epsilon(1e-12));
    }

    TEST_CASE("exhaustive permutation oracle") {
        const auto tri = prepared(miwt::testing::single_triangle());
        const ProductDomain d({ComponentGrid::from_mesh(tri, kInfinity)});
        const auto fam = enumerate_family(d);
        REQUIRE(fam.size() == 6);
        SignalMatrix s(4, 3);
        s << 0.3, 1.7, -0.4,  //
            1.1, 0.2, 0.9,    //
            2.4, 2.9, 0.1,    //
            3.0, 1.5, 1.3;
        const std::vector<int> groups{0, 0, 1, 1};
        const auto design = DesignSpec::two_sample(groups);
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);

        std::vector<std::vector<std::size_t>> all;
        std::vector<std::size_t> o{0, 1, 2, 3};
        do all.push_back(o);
        while (std::next_permutation(o.begin(), o.end()));
        auto plan = make_plan(design, h, all.size(), 0, PermutationScheme::raw_label_permutation);
        plan.explicit_orders = all;
        const auto p = pvalues(null_distribution(s, design, h, d, fam, plan), d, fam);

        auto field_of = [&](const std::vector<std::size_t>& order) {
            std::vector<double> t(3);
            for (int j = 0; j < 3; ++j) {
                std::vector<double> y(4);
                for (int i = 0; i < 4; ++i) y[i] = s(order[i], j);
                t[j] = oracle_t2(y, groups);
            }
            return t;
        };
        auto ball_stats = [&](const std::vector<double>& t) {
            std::vector<double> out;
            for (std::size_t i = 0; i < fam.size(); ++i) {
                double sum = 0.0;
                for (std::size_t g : fam.ball(d, i).support) sum += tri->weights()[g] * t[g];
                out.push_back(sum);
            }
            return out;
        };
        const auto obs = field_of(o);  // identity after the full cycle
        const auto obs_balls = ball_stats(obs);
        std::vector<int> point_count(3, 0), ball_count(fam.size(), 0);
        for (const auto& order : all) {
            const auto t = field_of(order);
            const auto tb = ball_stats(t);
            for (int j = 0; j < 3; ++j) point_count[j] += t[j] >= obs[j];
            for (std::size_t i = 0; i < fam.size(); ++i) ball_count[i] += tb[i] >= obs_balls[i];
        }
        for (int j = 0; j < 3; ++j) CHECK(p.pointwise[j] == (1.0 + point_count[j]) / 25.0);
        for (std::size_t i = 0; i < fam.size(); ++i) CHECK(p.ballwise[i] == (1.0 + ball_count[i]) / 25.0);
        for (int j = 0; j < 3; ++j) {
            double best = 0.0;
            for (std::size_t i = 0; i < fam.size(); ++i) {
                const auto sup = fam.ball(d, i).support;
                if (std::find(sup.begin(), sup.end(), static_cast<std::size_t>(j)) != sup.end())
                    best = std::max(best, (1.0 + ball_count[i]) / 25.0);
            }
            CHECK(p.adjusted[j] == best);
        }
    }

    TEST_CASE("structural invariants and cap monotonicity") {
        const auto s = gaussian(12, ico->vertex_count(), 12, 0.3);
        const auto design = DesignSpec::two_sample(halves(12));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        const auto plan = make_plan(design, h, 149, 21);
        std::vector<double> prev;
        for (double cap : {0.2, 0.5, 0.9, kInfinity}) {
            const ProductDomain d({ComponentGrid::from_mesh(ico, cap)});
            const auto fam = enumerate_family(d);
            const auto p = pvalues(null_distribution(s, design, h, d, fam, plan), d, fam);
            for (std::size_t g = 0; g < d.size(); ++g) {
                CHECK(p.adjusted[g] >= p.pointwise[g]);
                CHECK(on_grid(p.pointwise[g], 149));
                CHECK(on_grid(p.adjusted[g], 149));
                if (!prev.empty()) CHECK(p.adjusted[g] >= prev[g]);
            }
            for (double v : p.ballwise) CHECK(on_grid(v, 149));
            prev = p.adjusted;
        }
    }

    TEST_CASE("results do not depend on the thread count") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.8), ComponentGrid::interval(3, 0.0, 1.0, 0.6)});
        const auto fam = enumerate_family(d);
        const auto s = gaussian(10, d.size(), 13, 0.2);
        DesignSpec design;
        design.covariates = Eigen::VectorXd::LinSpaced(10, -1.0, 1.0);
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_trend_cutoff);
        const auto plan = make_plan(design, h, 60, 5);
        const auto one = null_distribution(s, design, h, d, fam, plan, {1, false});
        const auto four = null_distribution(s, design, h, d, fam, plan, {4, false});
        CHECK(one.observed_balls == four.observed_balls);
        CHECK(one.pointwise_exceed == four.pointwise_exceed);
        CHECK(one.ballwise_exceed == four.ballwise_exceed);
        const auto pa = pvalues(one, d, fam), pb = pvalues(four, d, fam);
        CHECK(pa.adjusted == pb.adjusted);
    }

    TEST_CASE("dimension mismatch") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, 0.5)});
        const auto fam = enumerate_family(d);
        const auto design = DesignSpec::two_sample(halves(6));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        CHECK_THROWS_AS(null_distribution(gaussian(6, 5, 1), design, h, d, fam, make_plan(design, h, 5, 0)), InputError);
    }
}

TEST_SUITE("null calibration") {
    TEST_CASE("pointwise p-values are uniform under exchangeable nulls") {
        const ProductDomain d({ComponentGrid::interval(200, 0.0, 1.0, 1e-3)});
        const auto fam = enumerate_family(d);
        const auto design = DesignSpec::two_sample(halves(10));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        std::size_t hits = 0, total = 0;
        for (std::uint64_t rep = 0; rep < 20; ++rep) {
            const auto s = gaussian(10, d.size(), 1000 + rep);
            const auto plan = make_plan(design, h, 99, rep, PermutationScheme::raw_label_permutation);
            const auto p = pvalues(null_distribution(s, design, h, d, fam, plan), d, fam);
            for (double v : p.pointwise) hits += v <= 0.05, ++total;
        }
        const double rate = static_cast<double>(hits) / total;
        const double se = std::sqrt(0.05 * 0.95 / total);
        CHECK(std::abs(rate - 0.05) <= 3.0 * se);
    }

    TEST_CASE("ball-wise error control on a fixed ball") {
        const ProductDomain d({ComponentGrid::from_mesh(ico, kInfinity)});
        const auto fam = enumerate_family(d);
        const auto design = DesignSpec::two_sample(halves(10));
        const auto h = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
        const auto fixed = ico->ball(0, 0.8);
        const int reps = 200;
        int any_in_ball = 0, any_at_all = 0;
        for (int rep = 0; rep < reps; ++rep) {
            const auto s = gaussian(10, d.size(), 5000 + rep);
            const auto p = pvalues(null_distribution(s, design, h, d, fam, make_plan(design, h, 99, rep)), d, fam);
            bool in_ball = false, anywhere = false;
            for (std::size_t g = 0; g < d.size(); ++g) {
                if (p.adjusted[g] <= 0.05) {
                    anywhere = true;
                    in_ball = in_ball || std::binary_search(fixed.begin(), fixed.end(), g);
                }
            }
            any_in_ball += in_ball;
            any_at_all += anywhere;
        }
        const double bound = 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps);
        CHECK(static_cast<double>(any_in_ball) / reps <= bound);
        CHECK(static_cast<double>(any_at_all) / reps <= bound);
    }
}
