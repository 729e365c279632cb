#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "miwt/mesh.hpp"
#include "miwt/permute.hpp"
#include "miwt/random.hpp"

namespace miwt {

/// Dense covariance matrices beyond this many vertices are refused.
inline constexpr std::size_t kMaxNoiseVertices = 2000;

/// Geodesic ball {e : d(center, e) < radius} used to build a truth region.
struct Patch {
    std::size_t center = 0;
    double radius = 0.0;
};

struct ScenarioConfig {
    std::string id;
    /// OFF mesh; an icosphere of the given order is built when empty.
    std::filesystem::path mesh_path;
    int icosphere_order = 6;
    double icosphere_radius = 1.0;
    /// Region where H0 is false: the union of the listed vertices and patches.
    std::vector<std::size_t> truth_vertices;
    std::vector<Patch> truth_patches;
    double signal_amplitude = 1.0;
    double noise_bandwidth = 0.3;
    double noise_sd = 1.0;
    std::size_t samples = 20;
    double radius_cap = kInfinity;
    std::size_t permutations = 500;
    std::size_t replicates = 250;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    PermutationScheme scheme = PermutationScheme::freedman_lane;
    /// Report an error instead of a null sensitivity when the truth is empty.
    bool require_sensitivity = false;
};

/// Throws InputError on the first violated invariant.
void validate(const ScenarioConfig& config);

struct ErrorRates {
    /// Empty when the truth region is empty.
    std::optional<double> sensitivity;
    double fwer = 0.0;
    double false_positive_rate = 0.0;
    double false_discovery_rate = 0.0;
};

using Mask = std::vector<std::uint8_t>;

/// Replicate averages of weighted ratios:
///   sensitivity = W(rejected & truth) / W(truth)
///   FWER        = fraction of replicates rejecting outside the truth
///   FPR         = W(rejected & !truth) / W(!truth)
///   FDR         = W(rejected & !truth) / W(rejected), 0 with no rejections
ErrorRates compute_error_rates(const std::vector<Mask>& rejections, const Mask& truth,
                               std::span<const double> weights, bool require_sensitivity = false);

/// Samples zero-mean Gaussian fields with covariance
/// sd^2 * exp(-d(x, y)^2 / (2 bandwidth^2)) through the symmetric square
/// root of the covariance (negative eigenvalues clamped to 0).
class GaussianKernelSampler {
public:
    GaussianKernelSampler(const DistanceMatrix& distances, double bandwidth, double sd);

    std::size_t size() const { return static_cast<std::size_t>(root_.rows()); }
    Eigen::VectorXd sample(Rng& rng) const;
    const Eigen::MatrixXd& covariance_root() const { return root_; }

private:
    Eigen::MatrixXd root_;
};

/// One field on the mesh vertices; the mesh must have distances.
std::vector<double> gaussian_kernel_noise(const TriangulatedManifold& mesh, double bandwidth, double sd,
                                          std::uint64_t seed);

Mask truth_mask(const TriangulatedManifold& mesh, const ScenarioConfig& config);

struct ScenarioResult {
    ErrorRates rates;
    Mask truth;
    std::vector<Mask> rejections;
    std::size_t family_size = 0;
};

/// Simulates `replicates` two-sample data sets (first half of the
/// observations without signal, second half with amplitude c on the truth
/// region, both with kernel noise), tests each and thresholds p~ at alpha.
ScenarioResult run_scenario(const ScenarioConfig& config, unsigned threads = 1);

/// Same on an already prepared mesh (weights and distances computed).
ScenarioResult run_scenario(const ScenarioConfig& config, std::shared_ptr<const TriangulatedManifold> mesh,
                            unsigned threads = 1);

}  // namespace miwt
