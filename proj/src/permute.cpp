#include "miwt/permute.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "miwt/error.hpp"
#include "miwt/parallel.hpp"
#include "miwt/random.hpp"

namespace miwt {

std::string to_string(PermutationScheme scheme) {
    return scheme == PermutationScheme::freedman_lane ? "freedman_lane" : "raw_label_permutation";
}

PermutationScheme scheme_from_string(const std::string& name) {
    if (name == "freedman_lane") return PermutationScheme::freedman_lane;
    if (name == "raw_label_permutation") return PermutationScheme::raw_label_permutation;
    throw InputError("unknown permutation scheme '" + name + "'");
}

namespace {

void check_order(std::span<const std::size_t> order, std::size_t n) {
    if (order.size() != n) throw std::invalid_argument("permutation has the wrong length");
    std::vector<char> seen(n, 0);
    for (std::size_t v : order) {
        if (v >= n || seen[v]) throw std::invalid_argument("not a permutation of 0..n-1");
        seen[v] = 1;
    }
}

bool is_identity(std::span<const std::size_t> order) {
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] != i) return false;
    }
    return true;
}

void check_field(const StatField& field) {
    for (std::size_t g = 0; g < field.size(); ++g) {
        if (!(field[g] >= 0.0) || !std::isfinite(field[g])) {
            throw ComputeError("test statistic at grid point " + std::to_string(g) + " is not finite and nonnegative");
        }
    }
}

}  // namespace

std::vector<std::size_t> PermutationPlan::order(std::size_t b, std::size_t n) const {
    if (!explicit_orders.empty()) {
        const auto& o = explicit_orders.at(b);
        check_order(o, n);
        return o;
    }
    return random_permutation(n, seed, b);
}

PermutationPlan make_plan(const DesignSpec& design, const HypothesisSpec& hypothesis, std::size_t permutations,
                          std::uint64_t seed, PermutationScheme scheme) {
    validate(design, hypothesis);
    if (permutations < 1) throw InputError("number of permutations must be at least 1");
    if (scheme == PermutationScheme::raw_label_permutation &&
        hypothesis.statistic != StatisticKind::t_two_sample_sq) {
        throw InputError("raw label permutation is only valid for the two-sample model");
    }
    PermutationPlan plan;
    plan.permutations = permutations;
    plan.seed = seed;
    plan.scheme = scheme;
    plan.null_design = reduced_design(design, hypothesis);
    return plan;
}

// ---------------------------------------------------------------------------
// Permuter
// ---------------------------------------------------------------------------

Permuter::Permuter(const SignalMatrix& signals, const PermutationPlan& plan)
    : signals_(signals), scheme_(plan.scheme) {
    if (scheme_ != PermutationScheme::freedman_lane) return;
    const Eigen::MatrixXd& z = plan.null_design;
    if (z.rows() != signals.rows()) throw InputError("null design rows do not match signals");
    if (z.cols() == 0) {
        fitted_ = SignalMatrix::Zero(signals.rows(), signals.cols());
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
        if (qr.rank() < z.cols()) throw ComputeError("reduced (null) design is rank deficient");
        fitted_ = z * qr.solve(signals);
    }
    residuals_ = signals - fitted_;
}

SignalMatrix Permuter::apply(std::span<const std::size_t> order) const {
    const auto n = static_cast<std::size_t>(signals_.rows());
    check_order(order, n);
    if (is_identity(order)) return signals_;
    SignalMatrix out(signals_.rows(), signals_.cols());
    const SignalMatrix& source = scheme_ == PermutationScheme::freedman_lane ? residuals_ : signals_;
    for (std::size_t i = 0; i < n; ++i) {
        out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(order[i]));
    }
    if (scheme_ == PermutationScheme::freedman_lane) out += fitted_;
    return out;
}

SignalMatrix permute_once(const SignalMatrix& signals, const PermutationPlan& plan, std::span<const std::size_t> order) {
    return Permuter(signals, plan).apply(order);
}

// ---------------------------------------------------------------------------
// Integration over balls
// ---------------------------------------------------------------------------

double integrated_stat(std::span<const double> field, const AdjustmentBall& ball) {
    double total = 0.0;
    for (std::size_t k = 0; k < ball.support.size(); ++k) total += ball.support_weights[k] * field[ball.support[k]];
    return total;
}

FamilyIntegrator::FamilyIntegrator(const ProductDomain& domain, const AdjustmentFamily& family)
    : domain_(domain), family_(family) {
    if (domain.component_count() != family.component_count()) throw std::invalid_argument("family does not match domain");
}

void FamilyIntegrator::integrate(std::span<const double> field, std::vector<double>& out) {
    if (field.size() != domain_.size()) throw std::invalid_argument("field size does not match domain");
    const std::size_t L = domain_.component_count();
    std::vector<std::size_t> dims(L);
    for (std::size_t l = 0; l < L; ++l) dims[l] = domain_.component(l).size();

    // Reduce the last axis first: (outer, n_a, inner) -> (outer, balls_a, inner).
    out.assign(field.begin(), field.end());
    for (std::size_t a = L; a-- > 0;) {
        std::size_t outer = 1, inner = 1;
        for (std::size_t l = 0; l < a; ++l) outer *= dims[l];
        for (std::size_t l = a + 1; l < L; ++l) inner *= dims[l];
        const auto& balls = family_.component(a);
        const auto& w = domain_.component(a).weights();
        const std::size_t n_in = dims[a], n_out = balls.size();
        scratch_.assign(outer * n_out * inner, 0.0);
        acc_.resize(inner);
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = out.data() + o * n_in * inner;
            double* dst = scratch_.data() + o * n_out * inner;
            for (std::size_t c = 0; c < balls.chains().size(); ++c) {
                const auto& on = balls.balls_on_chain()[c];
                if (on.empty()) continue;
                const auto& chain = balls.chains()[c];
                std::fill(acc_.begin(), acc_.end(), 0.0);
                std::size_t pos = 0;
                for (std::size_t b : on) {
                    for (const std::size_t end = balls.balls()[b].size; pos < end; ++pos) {
                        const std::size_t v = chain[pos];
                        const double wv = w[v];
                        const double* row = src + v * inner;
                        for (std::size_t i = 0; i < inner; ++i) acc_[i] += wv * row[i];
                    }
                    std::copy(acc_.begin(), acc_.end(), dst + b * inner);
                }
            }
        }
        out.swap(scratch_);
        dims[a] = n_out;
    }
}

std::vector<double> FamilyIntegrator::integrate(std::span<const double> field) {
    std::vector<double> out;
    integrate(field, out);
    return out;
}

template <class T>
std::vector<T> max_over_covering_balls(const ProductDomain& domain, const AdjustmentFamily& family,
                                       std::span<const T> values) {
    if (values.size() != family.size()) throw std::invalid_argument("one value per family member expected");
    const std::size_t L = domain.component_count();
    std::vector<std::size_t> dims(L);
    for (std::size_t l = 0; l < L; ++l) dims[l] = family.component(l).size();
    constexpr T lowest = std::numeric_limits<T>::lowest();

    // Expand one axis at a time: (outer, balls_a, inner) -> (outer, n_a, inner).
    std::vector<T> cur(values.begin(), values.end()), next, running;
    for (std::size_t a = 0; a < L; ++a) {
        std::size_t outer = 1, inner = 1;
        for (std::size_t l = 0; l < a; ++l) outer *= dims[l];
        for (std::size_t l = a + 1; l < L; ++l) inner *= dims[l];
        const auto& balls = family.component(a);
        const std::size_t n_in = dims[a], n_out = domain.component(a).size();
        next.assign(outer * n_out * inner, lowest);
        running.resize(inner);
        for (std::size_t o = 0; o < outer; ++o) {
            const T* src = cur.data() + o * n_in * inner;
            T* dst = next.data() + o * n_out * inner;
            for (std::size_t c = 0; c < balls.chains().size(); ++c) {
                const auto& on = balls.balls_on_chain()[c];
                if (on.empty()) continue;
                const auto& chain = balls.chains()[c];
                std::fill(running.begin(), running.end(), lowest);
                // Walk the chain backwards; position p is covered by every ball
                // on this chain of size > p.
                std::size_t k = on.size();
                for (std::size_t pos = balls.balls()[on.back()].size; pos-- > 0;) {
                    while (k > 0 && balls.balls()[on[k - 1]].size > pos) {
                        const T* row = src + on[k - 1] * inner;
                        for (std::size_t i = 0; i < inner; ++i) running[i] = std::max(running[i], row[i]);
                        --k;
                    }
                    T* out_row = dst + static_cast<std::size_t>(chain[pos]) * inner;
                    for (std::size_t i = 0; i < inner; ++i) out_row[i] = std::max(out_row[i], running[i]);
                }
            }
        }
        cur.swap(next);
        dims[a] = n_out;
    }
    return cur;
}

template std::vector<double> max_over_covering_balls<double>(const ProductDomain&, const AdjustmentFamily&,
                                                             std::span<const double>);
template std::vector<std::uint32_t> max_over_covering_balls<std::uint32_t>(const ProductDomain&,
                                                                           const AdjustmentFamily&,
                                                                           std::span<const std::uint32_t>);

// ---------------------------------------------------------------------------
// Null distribution and p-values
// ---------------------------------------------------------------------------

NullDistribution null_distribution(const SignalMatrix& signals, const DesignSpec& design,
                                   const HypothesisSpec& hypothesis, const ProductDomain& domain,
                                   const AdjustmentFamily& family, const PermutationPlan& plan,
                                   const NullOptions& options) {
    const auto statistic = make_statistic(design, hypothesis);
    const SignalMatrix centered = center_on_null(signals, design, hypothesis);
    return null_distribution(centered, *statistic, domain, family, plan, options);
}

NullDistribution null_distribution(const SignalMatrix& signals, const Statistic& statistic,
                                   const ProductDomain& domain, const AdjustmentFamily& family,
                                   const PermutationPlan& plan, const NullOptions& options) {
    if (static_cast<std::size_t>(signals.cols()) != domain.size()) {
        throw InputError("signal matrix has " + std::to_string(signals.cols()) + " columns, domain has " +
                         std::to_string(domain.size()) + " grid points");
    }
    if (plan.permutations < 1) throw InputError("number of permutations must be at least 1");
    if (!plan.explicit_orders.empty() && plan.explicit_orders.size() != plan.permutations) {
        throw InputError("explicit permutation list does not match the permutation count");
    }
    const auto n = static_cast<std::size_t>(signals.rows());

    NullDistribution result;
    result.permutations = plan.permutations;
    result.observed_field = statistic.evaluate(signals);
    check_field(result.observed_field);
    FamilyIntegrator observed_integrator(domain, family);
    observed_integrator.integrate(result.observed_field, result.observed_balls);
    if (options.keep_replicates) {
        result.permuted_fields.resize(plan.permutations);
        result.permuted_balls.resize(plan.permutations);
    }

    const Permuter permuter(signals, plan);
    const unsigned workers = resolve_threads(options.threads);
    struct Worker {
        std::vector<std::uint32_t> point_counts, ball_counts;
        std::vector<double> ball_stats;
        std::unique_ptr<FamilyIntegrator> integrator;
    };
    std::vector<Worker> state(workers);
    for (auto& w : state) {
        w.point_counts.assign(domain.size(), 0);
        w.ball_counts.assign(family.size(), 0);
        w.integrator = std::make_unique<FamilyIntegrator>(domain, family);
    }

    parallel_for(plan.permutations, workers, [&](unsigned worker, std::size_t b) {
        auto& ws = state[worker];
        const auto order = plan.order(b, n);
        StatField field = statistic.evaluate(permuter.apply(order));
        check_field(field);
        ws.integrator->integrate(field, ws.ball_stats);
        for (std::size_t g = 0; g < field.size(); ++g) ws.point_counts[g] += at_least_as_extreme(field[g], result.observed_field[g]);
        for (std::size_t i = 0; i < ws.ball_stats.size(); ++i) ws.ball_counts[i] += at_least_as_extreme(ws.ball_stats[i], result.observed_balls[i]);
        if (options.keep_replicates) {
            result.permuted_fields[b] = std::move(field);
            result.permuted_balls[b] = ws.ball_stats;
        }
    });

    result.pointwise_exceed.assign(domain.size(), 0);
    result.ballwise_exceed.assign(family.size(), 0);
    for (const auto& ws : state) {
        for (std::size_t g = 0; g < domain.size(); ++g) result.pointwise_exceed[g] += ws.point_counts[g];
        for (std::size_t i = 0; i < family.size(); ++i) result.ballwise_exceed[i] += ws.ball_counts[i];
    }
    return result;
}

namespace {

PValueFields from_counts(std::span<const std::uint32_t> point_counts, std::span<const std::uint32_t> ball_counts,
                         std::size_t permutations, const ProductDomain& domain, const AdjustmentFamily& family) {
    const double denom = static_cast<double>(permutations + 1);
    auto to_p = [&](std::uint32_t c) { return static_cast<double>(c + 1) / denom; };
    PValueFields out;
    out.permutations = permutations;
    out.pointwise.reserve(point_counts.size());
    for (auto c : point_counts) out.pointwise.push_back(to_p(c));
    out.ballwise.reserve(ball_counts.size());
    for (auto c : ball_counts) out.ballwise.push_back(to_p(c));
    // Max on integer counts, then convert, so p~ is exactly k/(B+1).
    const auto adjusted_counts = max_over_covering_balls<std::uint32_t>(domain, family, ball_counts);
    out.adjusted.reserve(adjusted_counts.size());
    for (auto c : adjusted_counts) out.adjusted.push_back(to_p(c));
    return out;
}

}  // namespace

PValueFields pvalues(const NullDistribution& null, const ProductDomain& domain, const AdjustmentFamily& family) {
    return from_counts(null.pointwise_exceed, null.ballwise_exceed, null.permutations, domain, family);
}

PValueFields pvalues(std::span<const double> observed_field, std::span<const double> observed_balls,
                     const std::vector<StatField>& permuted_fields,
                     const std::vector<std::vector<double>>& permuted_balls, const ProductDomain& domain,
                     const AdjustmentFamily& family) {
    if (permuted_fields.empty() || permuted_fields.size() != permuted_balls.size()) {
        throw std::invalid_argument("need the same positive number of permuted fields and ball tables");
    }
    std::vector<std::uint32_t> point_counts(observed_field.size(), 0), ball_counts(observed_balls.size(), 0);
    for (std::size_t b = 0; b < permuted_fields.size(); ++b) {
        for (std::size_t g = 0; g < observed_field.size(); ++g) {
            point_counts[g] += at_least_as_extreme(permuted_fields[b].at(g), observed_field[g]);
        }
        for (std::size_t i = 0; i < observed_balls.size(); ++i) {
            ball_counts[i] += at_least_as_extreme(permuted_balls[b].at(i), observed_balls[i]);
        }
    }
    return from_counts(point_counts, ball_counts, permuted_fields.size(), domain, family);
}

}  // namespace miwt
