#include "miwt/evalsim.hpp"

#include <cmath>

#include "miwt/domain.hpp"
#include "miwt/error.hpp"
#include "miwt/glm.hpp"
#include "miwt/parallel.hpp"

namespace miwt {

void validate(const ScenarioConfig& config) {
    const std::string where = config.id.empty() ? "scenario" : "scenario '" + config.id + "'";
    auto fail = [&](const std::string& what) { throw InputError(where + ": " + what); };
    if (config.mesh_path.empty() && config.icosphere_order < 1) fail("icosphere order must be at least 1");
    if (!(config.icosphere_radius > 0.0)) fail("icosphere radius must be positive");
    if (!(config.noise_bandwidth > 0.0) || !std::isfinite(config.noise_bandwidth)) fail("noise bandwidth must be positive");
    if (!(config.noise_sd > 0.0) || !std::isfinite(config.noise_sd)) fail("noise sd must be positive");
    if (!std::isfinite(config.signal_amplitude)) fail("signal amplitude must be finite");
    if (config.samples < 4 || config.samples % 2 != 0) fail("number of samples must be even and at least 4");
    if (!(config.radius_cap > 0.0)) fail("radius cap must be positive");
    if (config.permutations < 1) fail("number of permutations must be at least 1");
    if (config.replicates < 1) fail("number of replicates must be at least 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) fail("alpha must lie in (0, 1)");
    for (const auto& patch : config.truth_patches) {
        if (!(patch.radius > 0.0)) fail("truth patch radius must be positive");
    }
}

ErrorRates compute_error_rates(const std::vector<Mask>& rejections, const Mask& truth,
                               std::span<const double> weights, bool require_sensitivity) {
    const std::size_t m = truth.size();
    if (weights.size() != m) throw std::invalid_argument("weights and truth mask differ in length");
    double truth_weight = 0.0, null_weight = 0.0;
    for (std::size_t v = 0; v < m; ++v) (truth[v] ? truth_weight : null_weight) += weights[v];
    if (truth_weight == 0.0 && require_sensitivity) {
        throw InputError("sensitivity requested but the truth region is empty");
    }
    ErrorRates rates;
    if (rejections.empty()) return rates;

    double sensitivity = 0.0;
    for (const auto& rejected : rejections) {
        if (rejected.size() != m) throw std::invalid_argument("rejection mask has the wrong length");
        double true_hits = 0.0, false_hits = 0.0;
        bool any_false = false;
        for (std::size_t v = 0; v < m; ++v) {
            if (!rejected[v]) continue;
            if (truth[v]) {
                true_hits += weights[v];
            } else {
                false_hits += weights[v];
                any_false = true;
            }
        }
        if (truth_weight > 0.0) sensitivity += true_hits / truth_weight;
        rates.fwer += any_false ? 1.0 : 0.0;
        if (null_weight > 0.0) rates.false_positive_rate += false_hits / null_weight;
        const double total = true_hits + false_hits;
        if (total > 0.0) rates.false_discovery_rate += false_hits / total;
    }
    const auto n = static_cast<double>(rejections.size());
    if (truth_weight > 0.0) rates.sensitivity = sensitivity / n;
    rates.fwer /= n;
    rates.false_positive_rate /= n;
    rates.false_discovery_rate /= n;
    return rates;
}

GaussianKernelSampler::GaussianKernelSampler(const DistanceMatrix& distances, double bandwidth, double sd) {
    if (!(bandwidth > 0.0) || !(sd > 0.0)) throw InputError("noise bandwidth and sd must be positive");
    const std::size_t m = distances.size();
    if (m > kMaxNoiseVertices) {
        throw InputError("dense kernel noise is limited to " + std::to_string(kMaxNoiseVertices) +
                         " vertices; mesh has " + std::to_string(m));
    }
    Eigen::MatrixXd cov(m, m);
    const double scale = 1.0 / (2.0 * bandwidth * bandwidth);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = distances(i, j);
            cov(i, j) = std::isfinite(d) ? sd * sd * std::exp(-d * d * scale) : 0.0;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw ComputeError("eigendecomposition of the noise covariance failed");
    const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_ = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
    if (!root_.allFinite()) throw ComputeError("noise covariance square root is not finite");
}

Eigen::VectorXd GaussianKernelSampler::sample(Rng& rng) const {
    Eigen::VectorXd z(root_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return root_ * z;
}

std::vector<double> gaussian_kernel_noise(const TriangulatedManifold& mesh, double bandwidth, double sd,
                                          std::uint64_t seed) {
    GaussianKernelSampler sampler(mesh.distances(), bandwidth, sd);
    Rng rng(seed);
    const Eigen::VectorXd field = sampler.sample(rng);
    return {field.data(), field.data() + field.size()};
}

Mask truth_mask(const TriangulatedManifold& mesh, const ScenarioConfig& config) {
    Mask truth(mesh.vertex_count(), 0);
    for (std::size_t v : config.truth_vertices) {
        if (v >= truth.size()) throw InputError("truth vertex " + std::to_string(v) + " is not a mesh vertex");
        truth[v] = 1;
    }
    for (const auto& patch : config.truth_patches) {
        if (patch.center >= truth.size()) {
            throw InputError("truth patch center " + std::to_string(patch.center) + " is not a mesh vertex");
        }
        for (std::size_t v : mesh.ball(patch.center, patch.radius)) truth[v] = 1;
    }
    return truth;
}

ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads) {
    validate(config);
    auto mesh = std::make_shared<TriangulatedManifold>(
        config.mesh_path.empty() ? build_icosphere(config.icosphere_order, config.icosphere_radius)
                                 : load_off(config.mesh_path));
    if (mesh->vertex_count() > kMaxNoiseVertices) {
        throw InputError("simulation is limited to meshes with at most " + std::to_string(kMaxNoiseVertices) +
                         " vertices");
    }
    mesh->compute_weights();
    mesh->compute_distances(threads);
    return run_scenario(config, std::move(mesh), threads);
}

ScenarioResult run_scenario(const ScenarioConfig& config, std::shared_ptr<const TriangulatedManifold> mesh,
                            unsigned threads) {
    validate(config);
    const std::size_t m = mesh->vertex_count();
    if (m > kMaxNoiseVertices) {
        throw InputError("simulation is limited to meshes with at most " + std::to_string(kMaxNoiseVertices) +
                         " vertices");
    }

    ScenarioResult result;
    result.truth = truth_mask(*mesh, config);
    const ProductDomain domain({ComponentGrid::from_mesh(mesh, config.radius_cap)});
    const AdjustmentFamily family = enumerate_family(domain);
    result.family_size = family.size();

    const std::size_t n = config.samples;
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = i < n / 2 ? 0 : 1;
    const DesignSpec design = DesignSpec::two_sample(labels);
    const HypothesisSpec hypothesis = HypothesisSpec::last_coefficient(design, StatisticKind::t_two_sample_sq);
    const auto statistic = make_statistic(design, hypothesis);
    const GaussianKernelSampler sampler(mesh->distances(), config.noise_bandwidth, config.noise_sd);

    result.rejections.assign(config.replicates, Mask(m, 0));
    parallel_for(config.replicates, resolve_threads(threads), [&](unsigned, std::size_t rep) {
        Rng noise(derive_seed(config.seed, 2 * rep));
        SignalMatrix signals(n, m);
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd eps = sampler.sample(noise);
            for (std::size_t v = 0; v < m; ++v) {
                const double theta = (labels[i] == 1 && result.truth[v]) ? config.signal_amplitude : 0.0;
                signals(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v)) = theta + eps[static_cast<Eigen::Index>(v)];
            }
        }
        const PermutationPlan plan =
            make_plan(design, hypothesis, config.permutations, derive_seed(config.seed, 2 * rep + 1), config.scheme);
        const NullDistribution null = null_distribution(signals, *statistic, domain, family, plan);
        const PValueFields p = pvalues(null, domain, family);
        for (std::size_t v = 0; v < m; ++v) result.rejections[rep][v] = p.adjusted[v] <= config.alpha;
    });

    result.rates = compute_error_rates(result.rejections, result.truth, mesh->weights(), config.require_sensitivity);
    return result;
}

}  // namespace miwt
