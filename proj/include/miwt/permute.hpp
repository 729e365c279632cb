#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "miwt/domain.hpp"
#include "miwt/glm.hpp"

namespace miwt {

enum class PermutationScheme { freedman_lane, raw_label_permutation };

std::string to_string(PermutationScheme scheme);
PermutationScheme scheme_from_string(const std::string& name);

struct PermutationPlan {
    std::size_t permutations = 500;
    std::uint64_t seed = 0;
    PermutationScheme scheme = PermutationScheme::freedman_lane;
    /// Reduced design under H0 used to residualize (Freedman-Lane).
    Eigen::MatrixXd null_design;
    /// When non-empty, replicate b uses explicit_orders[b] instead of a
    /// random draw; must hold exactly `permutations` orders.
    std::vector<std::vector<std::size_t>> explicit_orders;

    /// Observation order of replicate b (a permutation of 0..n-1).
    std::vector<std::size_t> order(std::size_t b, std::size_t n) const;
};

/// Plan with the null design derived from the hypothesis. Raw label
/// permutation is only accepted for the two-sample statistic.
PermutationPlan make_plan(const DesignSpec& design, const HypothesisSpec& hypothesis, std::size_t permutations,
                          std::uint64_t seed, PermutationScheme scheme = PermutationScheme::freedman_lane);

/// Applies one permutation to every column at once. Freedman-Lane fits the
/// reduced model per column and permutes the residual rows before adding
/// the fit back; the raw scheme permutes observation rows. Row i of the
/// output takes row order[i] of the residuals (or signals).
class Permuter {
public:
    Permuter(const SignalMatrix& signals, const PermutationPlan& plan);
    SignalMatrix apply(std::span<const std::size_t> order) const;

private:
    const SignalMatrix& signals_;
    PermutationScheme scheme_;
    SignalMatrix fitted_;
    SignalMatrix residuals_;
};

SignalMatrix permute_once(const SignalMatrix& signals, const PermutationPlan& plan, std::span<const std::size_t> order);

/// Sum over the ball's support of product weight times T.
double integrated_stat(std::span<const double> field, const AdjustmentBall& ball);

/// T^I for every member of the family, using prefix sums along the
/// component chains one axis at a time (Fubini).
class FamilyIntegrator {
public:
    FamilyIntegrator(const ProductDomain& domain, const AdjustmentFamily& family);
    void integrate(std::span<const double> field, std::vector<double>& out);
    std::vector<double> integrate(std::span<const double> field);

private:
    const ProductDomain& domain_;
    const AdjustmentFamily& family_;
    std::vector<double> scratch_;
    std::vector<double> acc_;
};

/// out(x) = max over family members I containing x of values(I).
template <class T>
std::vector<T> max_over_covering_balls(const ProductDomain& domain, const AdjustmentFamily& family,
                                       std::span<const T> values);

/// Permuted statistics within this relative distance below the observed
/// value count as ties, and ties count as at least as extreme. Reorderings
/// within a group reproduce the observed value only up to rounding.
inline constexpr double kTieTolerance = 1e-12;

inline bool at_least_as_extreme(double permuted, double observed) {
    return permuted >= observed - kTieTolerance * std::abs(observed);
}

struct NullDistribution {
    StatField observed_field;
    std::vector<double> observed_balls;
    /// #{b : permuted >= observed}, per grid point and per family member.
    std::vector<std::uint32_t> pointwise_exceed;
    std::vector<std::uint32_t> ballwise_exceed;
    std::size_t permutations = 0;
    /// Only filled when NullOptions::keep_replicates is set.
    std::vector<StatField> permuted_fields;
    std::vector<std::vector<double>> permuted_balls;
};

struct NullOptions {
    unsigned threads = 1;
    bool keep_replicates = false;
};

/// Observed statistics and their permutation null. The same permutation is
/// applied to every grid point within a replicate. Results do not depend
/// on the thread count.
NullDistribution null_distribution(const SignalMatrix& signals, const DesignSpec& design,
                                   const HypothesisSpec& hypothesis, const ProductDomain& domain,
                                   const AdjustmentFamily& family, const PermutationPlan& plan,
                                   const NullOptions& options = {});

/// Same, with a caller-supplied statistic (e.g. for composite hypotheses).
NullDistribution null_distribution(const SignalMatrix& signals, const Statistic& statistic,
                                   const ProductDomain& domain, const AdjustmentFamily& family,
                                   const PermutationPlan& plan, const NullOptions& options = {});

struct PValueFields {
    std::vector<double> pointwise;
    std::vector<double> ballwise;
    std::vector<double> adjusted;
    std::size_t permutations = 0;
};

/// p = (1 + #{permuted >= observed}) / (B + 1); adjusted p(x) is the max
/// of the ball-wise p over family members containing x.
PValueFields pvalues(const NullDistribution& null, const ProductDomain& domain, const AdjustmentFamily& family);

/// Same from explicitly stored permuted statistics.
PValueFields pvalues(std::span<const double> observed_field, std::span<const double> observed_balls,
                     const std::vector<StatField>& permuted_fields,
                     const std::vector<std::vector<double>>& permuted_balls, const ProductDomain& domain,
                     const AdjustmentFamily& family);

}  // namespace miwt
