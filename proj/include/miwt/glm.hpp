#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace miwt {

/// Observations by rows (signals), product-grid points by columns.
using SignalMatrix = Eigen::MatrixXd;

/// Test statistic T over the product grid; finite and nonnegative.
using StatField = std::vector<double>;

/// Scalar covariates per observation; the design matrix is an intercept
/// column followed by the covariate columns.
struct DesignSpec {
    Eigen::MatrixXd covariates;  // N x K
    /// Two-group partition (0/1 per observation) for the two-sample model.
    std::optional<std::vector<int>> group_labels;

    /// Two-sample model: a single covariate, the indicator of group 1.
    static DesignSpec two_sample(std::vector<int> labels);

    std::size_t observations() const { return static_cast<std::size_t>(covariates.rows()); }
    Eigen::MatrixXd matrix() const;
};

enum class Sidedness { two_sided, one_sided_positive };
enum class StatisticKind { t_two_sample_sq, t_trend_cutoff, slope_sq };

std::string to_string(StatisticKind kind);
StatisticKind statistic_from_string(const std::string& name);

/// Pointwise hypothesis C beta(s) = c0 for every grid point s.
struct HypothesisSpec {
    Eigen::MatrixXd contrast;  // m_h x (K + 1)
    Eigen::VectorXd c0;        // m_h; constant over the domain
    Sidedness sidedness = Sidedness::two_sided;
    StatisticKind statistic = StatisticKind::t_two_sample_sq;

    /// C = [0 ... 0 1], c0 = 0: tests the last covariate.
    static HypothesisSpec last_coefficient(const DesignSpec& design, StatisticKind statistic);
};

/// Throws InputError on inconsistent dimensions or a rank-deficient
/// design/contrast.
void validate(const DesignSpec& design, const HypothesisSpec& hypothesis);

struct OlsFit {
    Eigen::VectorXd coefficients;
    Eigen::VectorXd residuals;
    /// Empty unless requested.
    Eigen::VectorXd standard_errors;
    double residual_variance = 0.0;
};

OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& design, bool with_standard_errors = true);

/// ((mean_1 - mean_2) / s)^2 with pooled-variance standard error s.
/// Groups are the observations labelled 0 and 1; each needs >= 2 members.
double t_two_sample_sq(std::span<const double> y, std::span<const int> groups);
/// max(0, b / SE(b)) for the OLS slope b of y on t.
double t_trend_cutoff(std::span<const double> y, std::span<const double> t);
/// Squared OLS slope of y on t.
double slope_sq(std::span<const double> y, std::span<const double> t);

/// Maps signals to a StatField. This is the extension point for statistics
/// of hypotheses the built-in kinds do not cover.
class Statistic {
public:
    virtual ~Statistic() = default;
    virtual StatField evaluate(const SignalMatrix& signals) const = 0;
};

std::unique_ptr<Statistic> make_statistic(const DesignSpec& design, const HypothesisSpec& hypothesis);

StatField stat_field(const SignalMatrix& signals, const DesignSpec& design, const HypothesisSpec& hypothesis);

/// Design of the model restricted to C beta = 0: X times a basis of the
/// null space of C. May have zero columns.
Eigen::MatrixXd reduced_design(const DesignSpec& design, const HypothesisSpec& hypothesis);

/// Signals shifted by a particular solution of C beta = c0, turning the
/// hypothesis into C beta = 0. Returns the input when c0 = 0.
SignalMatrix center_on_null(const SignalMatrix& signals, const DesignSpec& design, const HypothesisSpec& hypothesis);

}  // namespace miwt
