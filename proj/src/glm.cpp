#include "miwt/glm.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

#include "miwt/error.hpp"

namespace miwt {

namespace {

// Relative tolerances deciding that a variance or an estimate is zero.
constexpr double kZeroVariance = 1e-24;  // squared relative residual norm
constexpr double kZeroEffect = 1e-10;

[[noreturn]] void degenerate(const char* what) {
    throw ComputeError(std::string(what) + ": zero residual variance with a nonzero effect (statistic is infinite)");
}

std::vector<int> groups_of(const DesignSpec& design) {
    if (design.group_labels) return *design.group_labels;
    if (design.covariates.cols() != 1) throw InputError("two-sample statistic needs exactly one group covariate");
    std::vector<int> groups(design.observations());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const double v = design.covariates(static_cast<Eigen::Index>(i), 0);
        if (v != 0.0 && v != 1.0) throw InputError("two-sample group covariate must be 0/1");
        groups[i] = static_cast<int>(v);
    }
    return groups;
}

double two_sample_value(std::span<const double> y, std::span<const int> groups, std::size_t n0, std::size_t n1) {
    double s0 = 0.0, s1 = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        (groups[i] == 0 ? s0 : s1) += y[i];
        scale = std::max(scale, std::abs(y[i]));
    }
    const double m0 = s0 / static_cast<double>(n0), m1 = s1 / static_cast<double>(n1);
    double ss0 = 0.0, ss1 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (groups[i] == 0) {
            ss0 += (y[i] - m0) * (y[i] - m0);
        } else {
            ss1 += (y[i] - m1) * (y[i] - m1);
        }
    }
    const double pooled = (ss0 + ss1) / static_cast<double>(n0 + n1 - 2);
    const double diff = m0 - m1;
    if (pooled <= kZeroVariance * scale * scale) {
        if (std::abs(diff) <= kZeroEffect * scale) return 0.0;
        degenerate("two-sample t");
    }
    const double se2 = pooled * (1.0 / static_cast<double>(n0) + 1.0 / static_cast<double>(n1));
    return diff * diff / se2;
}

std::pair<std::size_t, std::size_t> group_sizes(std::span<const int> groups) {
    std::size_t n0 = 0, n1 = 0;
    for (int g : groups) {
        if (g == 0) {
            ++n0;
        } else if (g == 1) {
            ++n1;
        } else {
            throw InputError("group labels must be 0 or 1");
        }
    }
    if (n0 < 2 || n1 < 2) throw InputError("each group needs at least two observations");
    return {n0, n1};
}

class TwoSampleStatistic final : public Statistic {
public:
    explicit TwoSampleStatistic(std::vector<int> groups) : groups_(std::move(groups)) {
        std::tie(n0_, n1_) = group_sizes(groups_);
    }

    StatField evaluate(const SignalMatrix& y) const override {
        if (static_cast<std::size_t>(y.rows()) != groups_.size()) throw InputError("signal rows do not match design");
        StatField out(static_cast<std::size_t>(y.cols()));
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
            out[static_cast<std::size_t>(j)] =
                two_sample_value({y.col(j).data(), groups_.size()}, groups_, n0_, n1_);
        }
        return out;
    }

private:
    std::vector<int> groups_;
    std::size_t n0_ = 0, n1_ = 0;
};

/// Single-row contrast c beta of an OLS fit: either the cut-off t ratio or
/// the squared estimate.
class ContrastStatistic final : public Statistic {
public:
    ContrastStatistic(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& c, StatisticKind kind)
        : x_(x), kind_(kind) {
        const Eigen::Index n = x.rows(), p = x.cols();
        if (kind == StatisticKind::t_trend_cutoff && n <= p) {
            throw InputError("t statistic needs more observations than design columns");
        }
        const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
        pinv_ = xtx_inv * x.transpose();
        weights_ = c * pinv_;
        variance_factor_ = (c * xtx_inv * c.transpose())(0, 0);
        dof_ = static_cast<double>(n - p);
    }

    StatField evaluate(const SignalMatrix& y) const override {
        if (y.rows() != x_.rows()) throw InputError("signal rows do not match design");
        const Eigen::RowVectorXd est = weights_ * y;
        StatField out(static_cast<std::size_t>(y.cols()));
        if (kind_ == StatisticKind::slope_sq) {
            for (Eigen::Index j = 0; j < y.cols(); ++j) out[static_cast<std::size_t>(j)] = est(j) * est(j);
            return out;
        }
        const Eigen::MatrixXd resid = y - x_ * (pinv_ * y);
        const double wnorm = weights_.norm();
        for (Eigen::Index j = 0; j < y.cols(); ++j) {
            const double rss = resid.col(j).squaredNorm();
            const double ynorm2 = y.col(j).squaredNorm();
            const double b = est(j);
            double value;
            if (rss <= kZeroVariance * ynorm2) {
                if (b <= kZeroEffect * wnorm * std::sqrt(ynorm2)) {
                    value = 0.0;
                } else {
                    degenerate("trend t");
                }
            } else {
                value = std::max(0.0, b / std::sqrt(rss / dof_ * variance_factor_));
            }
            out[static_cast<std::size_t>(j)] = value;
        }
        return out;
    }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd pinv_;
    Eigen::RowVectorXd weights_;
    double variance_factor_ = 0.0;
    double dof_ = 0.0;
    StatisticKind kind_;
};

Eigen::MatrixXd trend_design(std::span<const double> t) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(t.size()), 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
        x(static_cast<Eigen::Index>(i), 1) = t[i];
    }
    return x;
}

void require_full_rank(const Eigen::MatrixXd& x, const char* what) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw ComputeError(std::string(what) + " is rank deficient");
}

}  // namespace

// ---------------------------------------------------------------------------

DesignSpec DesignSpec::two_sample(std::vector<int> labels) {
    DesignSpec d;
    d.covariates.resize(static_cast<Eigen::Index>(labels.size()), 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InputError("group labels must be 0 or 1");
        d.covariates(static_cast<Eigen::Index>(i), 0) = labels[i];
    }
    d.group_labels = std::move(labels);
    return d;
}

Eigen::MatrixXd DesignSpec::matrix() const {
    Eigen::MatrixXd x(covariates.rows(), covariates.cols() + 1);
    x.col(0).setOnes();
    x.rightCols(covariates.cols()) = covariates;
    return x;
}

std::string to_string(StatisticKind kind) {
    switch (kind) {
        case StatisticKind::t_two_sample_sq: return "t_two_sample_sq";
        case StatisticKind::t_trend_cutoff: return "t_trend_cutoff";
        case StatisticKind::slope_sq: return "slope_sq";
    }
    return "?";
}

StatisticKind statistic_from_string(const std::string& name) {
    if (name == "t_two_sample_sq") return StatisticKind::t_two_sample_sq;
    if (name == "t_trend_cutoff") return StatisticKind::t_trend_cutoff;
    if (name == "slope_sq") return StatisticKind::slope_sq;
    throw InputError("unknown statistic '" + name + "'");
}

HypothesisSpec HypothesisSpec::last_coefficient(const DesignSpec& design, StatisticKind statistic) {
    HypothesisSpec h;
    const Eigen::Index p = design.covariates.cols() + 1;
    h.contrast = Eigen::MatrixXd::Zero(1, p);
    h.contrast(0, p - 1) = 1.0;
    h.c0 = Eigen::VectorXd::Zero(1);
    h.statistic = statistic;
    h.sidedness = statistic == StatisticKind::t_trend_cutoff ? Sidedness::one_sided_positive : Sidedness::two_sided;
    return h;
}

void validate(const DesignSpec& design, const HypothesisSpec& h) {
    const auto n = design.covariates.rows();
    const auto p = design.covariates.cols() + 1;
    if (n < 2) throw InputError("need at least two observations");
    if (!design.covariates.allFinite()) throw InputError("covariates must be finite");
    if (design.group_labels && static_cast<Eigen::Index>(design.group_labels->size()) != n) {
        throw InputError("group labels do not match the number of observations");
    }
    if (h.contrast.cols() != p) {
        throw InputError("contrast has " + std::to_string(h.contrast.cols()) + " columns, design has " +
                         std::to_string(p));
    }
    if (h.contrast.rows() < 1 || h.c0.size() != h.contrast.rows()) {
        throw InputError("contrast rows and c0 length must agree and be positive");
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> cqr(h.contrast.transpose());
    if (cqr.rank() < h.contrast.rows()) throw InputError("contrast matrix is not full rank");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> xqr(design.matrix());
    if (xqr.rank() < p) throw InputError("design matrix (intercept + covariates) is rank deficient");
    if (h.contrast.rows() > 1) {
        throw InputError("no built-in statistic for composite hypotheses; supply a custom Statistic");
    }
    const bool one_sided = h.statistic == StatisticKind::t_trend_cutoff;
    if (one_sided != (h.sidedness == Sidedness::one_sided_positive)) {
        throw InputError(to_string(h.statistic) + " does not support the requested sidedness");
    }
    if (h.statistic == StatisticKind::t_two_sample_sq) {
        const auto groups = groups_of(design);
        group_sizes(groups);
        if (p != 2 || h.contrast(0, 0) != 0.0 || h.contrast(0, 1) == 0.0) {
            throw InputError("two-sample statistic tests the group coefficient of a one-covariate design");
        }
    }
}

OlsFit ols_fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, bool with_standard_errors) {
    if (y.size() != x.rows()) throw std::invalid_argument("response and design lengths differ");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw ComputeError("design matrix is rank deficient");
    OlsFit fit;
    fit.coefficients = qr.solve(y);
    fit.residuals = y - x * fit.coefficients;
    if (with_standard_errors) {
        if (x.rows() <= x.cols()) throw ComputeError("standard errors need more observations than coefficients");
        fit.residual_variance = fit.residuals.squaredNorm() / static_cast<double>(x.rows() - x.cols());
        const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
        fit.standard_errors = (fit.residual_variance * xtx_inv.diagonal().array()).sqrt().matrix();
    }
    return fit;
}

double t_two_sample_sq(std::span<const double> y, std::span<const int> groups) {
    if (y.size() != groups.size()) throw std::invalid_argument("values and groups differ in length");
    const auto [n0, n1] = group_sizes(groups);
    return two_sample_value(y, groups, n0, n1);
}

double t_trend_cutoff(std::span<const double> y, std::span<const double> t) {
    if (y.size() != t.size()) throw std::invalid_argument("values and covariate differ in length");
    if (y.size() < 3) throw InputError("trend t statistic needs at least three observations");
    const Eigen::MatrixXd x = trend_design(t);
    require_full_rank(x, "trend design (constant covariate)");
    Eigen::RowVectorXd c(2);
    c << 0.0, 1.0;
    const Eigen::MatrixXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return ContrastStatistic(x, c, StatisticKind::t_trend_cutoff).evaluate(ym)[0];
}

double slope_sq(std::span<const double> y, std::span<const double> t) {
    if (y.size() != t.size()) throw std::invalid_argument("values and covariate differ in length");
    if (y.size() < 2) throw InputError("slope needs at least two observations");
    const Eigen::MatrixXd x = trend_design(t);
    require_full_rank(x, "trend design (constant covariate)");
    Eigen::RowVectorXd c(2);
    c << 0.0, 1.0;
    const Eigen::MatrixXd ym = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    return ContrastStatistic(x, c, StatisticKind::slope_sq).evaluate(ym)[0];
}

std::unique_ptr<Statistic> make_statistic(const DesignSpec& design, const HypothesisSpec& h) {
    validate(design, h);
    if (h.statistic == StatisticKind::t_two_sample_sq) return std::make_unique<TwoSampleStatistic>(groups_of(design));
    return std::make_unique<ContrastStatistic>(design.matrix(), h.contrast.row(0), h.statistic);
}

StatField stat_field(const SignalMatrix& signals, const DesignSpec& design, const HypothesisSpec& h) {
    return make_statistic(design, h)->evaluate(center_on_null(signals, design, h));
}

Eigen::MatrixXd reduced_design(const DesignSpec& design, const HypothesisSpec& h) {
    const Eigen::MatrixXd x = design.matrix();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(h.contrast, Eigen::ComputeFullV);
    const Eigen::Index rank = svd.rank();
    const Eigen::MatrixXd basis = svd.matrixV().rightCols(x.cols() - rank);
    return x * basis;
}

SignalMatrix center_on_null(const SignalMatrix& signals, const DesignSpec& design, const HypothesisSpec& h) {
    if (h.c0.isZero(0.0)) return signals;
    const Eigen::VectorXd beta0 = h.contrast.completeOrthogonalDecomposition().solve(h.c0);
    const Eigen::VectorXd shift = design.matrix() * beta0;
    return signals.colwise() - shift;
}

}  // namespace miwt
