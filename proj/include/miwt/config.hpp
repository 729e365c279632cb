#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "miwt/domain.hpp"
#include "miwt/evalsim.hpp"
#include "miwt/glm.hpp"
#include "miwt/permute.hpp"

namespace miwt {

struct ComponentConfig {
    ComponentKind kind = ComponentKind::mesh;
    // mesh: either an OFF file or an icosphere order
    std::filesystem::path mesh_path;
    int icosphere_order = 0;
    double icosphere_radius = 1.0;
    std::filesystem::path edge_lengths;
    std::filesystem::path distance_cache;
    // circle / interval
    std::size_t points = 0;
    double circumference = 0.0;
    double lower = 0.0;
    double upper = 1.0;
    double radius_cap = kInfinity;
};

enum class SignalFormat { csv, binary };

/// Parsed and validated run configuration. Relative paths are resolved
/// against the directory of the configuration file.
struct RunConfig {
    std::vector<ComponentConfig> components;
    std::size_t membership_limit = kDefaultMembershipLimit;

    std::filesystem::path signals;
    SignalFormat format = SignalFormat::csv;

    std::optional<std::vector<int>> groups;
    Eigen::MatrixXd covariates;
    std::optional<Eigen::MatrixXd> contrast;
    std::optional<Eigen::VectorXd> c0;
    StatisticKind statistic = StatisticKind::t_two_sample_sq;

    std::size_t permutations = 500;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    PermutationScheme scheme = PermutationScheme::freedman_lane;

    std::filesystem::path out_dir = "out";
    bool ball_table = true;

    /// FNV-1a 64 of the compact JSON text, as 16 hex digits.
    std::string hash;

    DesignSpec design() const;
    HypothesisSpec hypothesis(const DesignSpec& design) const;
};

std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// Accepts a number or the strings "inf"/"infinity".
double parse_cap(const nlohmann::json& value, const std::string& where);

RunConfig parse_run_config(const nlohmann::json& root, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Sweep file: {"defaults": {...}, "scenarios": [{...}, ...]}; each
/// scenario is the defaults overlaid with its own keys.
std::vector<ScenarioConfig> parse_sweep(const nlohmann::json& root, const std::filesystem::path& base_dir);
std::vector<ScenarioConfig> load_sweep(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace miwt
