#include "miwt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <numbers>

#include "miwt/error.hpp"
#include "miwt/io.hpp"

namespace miwt {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw InputError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items()) {
        const bool known =
            std::any_of(allowed.begin(), allowed.end(), [&](const char* name) { return key == name; });
        if (!known) throw InputError("unknown key '" + key + "' in " + where);
    }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) throw InputError(where + "." + key + " must be a number");
    return v.get<double>();
}

std::uint64_t get_unsigned(const json& obj, const char* key, const std::string& where, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw InputError(where + "." + key + " must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& where, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) throw InputError(where + "." + key + " must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, const std::string& where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw InputError(where + "." + key + " must be true or false");
    return v.get<bool>();
}

std::filesystem::path get_path(const json& obj, const char* key, const std::string& where,
                               const std::filesystem::path& base_dir) {
    const std::string text = get_string(obj, key, where, "");
    if (text.empty()) return {};
    std::filesystem::path p(text);
    return p.is_absolute() ? p : base_dir / p;
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array()) throw InputError(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
        if (!x.is_number()) throw InputError(where + " must be an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

/// A flat array is one row; an array of arrays is a matrix.
Eigen::MatrixXd number_matrix(const json& v, const std::string& where, bool flat_is_column) {
    if (!v.is_array() || v.empty()) throw InputError(where + " must be a non-empty array");
    if (!v.front().is_array()) {
        const auto values = number_list(v, where);
        Eigen::MatrixXd m(flat_is_column ? values.size() : 1, flat_is_column ? 1 : values.size());
        for (std::size_t i = 0; i < values.size(); ++i) m(flat_is_column ? i : 0, flat_is_column ? 0 : i) = values[i];
        return m;
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < v.size(); ++r) rows.push_back(number_list(v[r], where + "[" + std::to_string(r) + "]"));
    const std::size_t cols = rows.front().size();
    Eigen::MatrixXd m(rows.size(), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) throw InputError(where + " has rows of different lengths");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

ComponentConfig parse_component(const json& obj, const std::string& where, const std::filesystem::path& base_dir) {
    ComponentConfig c;
    const std::string type = get_string(obj, "type", where, "");
    if (obj.contains("radius_cap")) c.radius_cap = parse_cap(obj.at("radius_cap"), where + ".radius_cap");
    if (type == "mesh") {
        check_keys(obj, where, {"type", "path", "icosphere", "edge_lengths", "distance_cache", "radius_cap"});
        c.kind = ComponentKind::mesh;
        c.mesh_path = get_path(obj, "path", where, base_dir);
        if (obj.contains("icosphere")) {
            const json& ico = obj.at("icosphere");
            check_keys(ico, where + ".icosphere", {"order", "radius"});
            c.icosphere_order = static_cast<int>(get_unsigned(ico, "order", where + ".icosphere", 0));
            c.icosphere_radius = get_number(ico, "radius", where + ".icosphere", 1.0);
            if (c.icosphere_order < 1) throw InputError(where + ".icosphere.order must be at least 1");
            if (!(c.icosphere_radius > 0.0)) throw InputError(where + ".icosphere.radius must be positive");
        }
        if (c.mesh_path.empty() == (c.icosphere_order == 0)) {
            throw InputError(where + " needs exactly one of 'path' and 'icosphere'");
        }
        c.edge_lengths = get_path(obj, "edge_lengths", where, base_dir);
        c.distance_cache = get_path(obj, "distance_cache", where, base_dir);
    } else if (type == "circle") {
        check_keys(obj, where, {"type", "points", "circumference", "radius_cap"});
        c.kind = ComponentKind::circle;
        c.points = get_unsigned(obj, "points", where, 0);
        c.circumference = get_number(obj, "circumference", where, 2.0 * std::numbers::pi);
        if (c.points < 2) throw InputError(where + ".points must be at least 2");
        if (!(c.circumference > 0.0) || !std::isfinite(c.circumference)) {
            throw InputError(where + ".circumference must be positive");
        }
    } else if (type == "interval") {
        check_keys(obj, where, {"type", "points", "lower", "upper", "radius_cap"});
        c.kind = ComponentKind::interval;
        c.points = get_unsigned(obj, "points", where, 0);
        c.lower = get_number(obj, "lower", where, 0.0);
        c.upper = get_number(obj, "upper", where, 1.0);
        if (c.points < 2) throw InputError(where + ".points must be at least 2");
        if (!(c.upper > c.lower)) throw InputError(where + ": upper must exceed lower");
    } else {
        throw InputError(where + ".type must be 'mesh', 'circle' or 'interval'");
    }
    return c;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

double parse_cap(const json& value, const std::string& where) {
    double cap = 0.0;
    if (value.is_number()) {
        cap = value.get<double>();
    } else if (value.is_string() && (value == "inf" || value == "infinity")) {
        cap = kInfinity;
    } else {
        throw InputError(where + " must be a positive number or \"inf\"");
    }
    if (!(cap > 0.0)) throw InputError(where + " must be positive");
    return cap;
}

DesignSpec RunConfig::design() const {
    if (groups) return DesignSpec::two_sample(*groups);
    DesignSpec d;
    d.covariates = covariates;
    return d;
}

HypothesisSpec RunConfig::hypothesis(const DesignSpec& d) const {
    HypothesisSpec h = HypothesisSpec::last_coefficient(d, statistic);
    if (contrast) h.contrast = *contrast;
    h.c0 = c0 ? *c0 : Eigen::VectorXd::Zero(h.contrast.rows());
    return h;
}

RunConfig parse_run_config(const json& root, const std::filesystem::path& base_dir) {
    check_keys(root, "config", {"domain", "data", "model", "inference", "output"});
    for (const char* section : {"domain", "data", "model"}) {
        if (!root.contains(section)) throw InputError(std::string("config is missing the '") + section + "' section");
    }
    RunConfig cfg;

    const json& domain = root.at("domain");
    check_keys(domain, "domain", {"components", "membership_limit"});
    if (!domain.contains("components") || !domain.at("components").is_array() || domain.at("components").empty()) {
        throw InputError("domain.components must be a non-empty array");
    }
    const json& comps = domain.at("components");
    for (std::size_t l = 0; l < comps.size(); ++l) {
        cfg.components.push_back(parse_component(comps[l], "domain.components[" + std::to_string(l) + "]", base_dir));
    }
    cfg.membership_limit = get_unsigned(domain, "membership_limit", "domain", kDefaultMembershipLimit);

    const json& data = root.at("data");
    check_keys(data, "data", {"signals", "format"});
    cfg.signals = get_path(data, "signals", "data", base_dir);
    if (cfg.signals.empty()) throw InputError("data.signals is required");
    const std::string format = get_string(data, "format", "data", "csv");
    if (format == "csv") {
        cfg.format = SignalFormat::csv;
    } else if (format == "binary") {
        cfg.format = SignalFormat::binary;
    } else {
        throw InputError("data.format must be 'csv' or 'binary'");
    }

    const json& model = root.at("model");
    check_keys(model, "model", {"groups", "covariates", "contrast", "c0", "statistic"});
    cfg.statistic = statistic_from_string(get_string(model, "statistic", "model", "t_two_sample_sq"));
    if (model.contains("groups") == model.contains("covariates")) {
        throw InputError("model needs exactly one of 'groups' and 'covariates'");
    }
    if (model.contains("groups")) {
        std::vector<int> labels;
        for (double v : number_list(model.at("groups"), "model.groups")) {
            if (v != 0.0 && v != 1.0) throw InputError("model.groups must contain only 0 and 1");
            labels.push_back(static_cast<int>(v));
        }
        cfg.groups = std::move(labels);
    } else {
        cfg.covariates = number_matrix(model.at("covariates"), "model.covariates", true);
    }
    if (model.contains("contrast")) cfg.contrast = number_matrix(model.at("contrast"), "model.contrast", false);
    if (model.contains("c0")) {
        const json& v = model.at("c0");
        const auto values = v.is_number() ? std::vector<double>{v.get<double>()} : number_list(v, "model.c0");
        cfg.c0 = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    }

    const json inference = root.value("inference", json::object());
    check_keys(inference, "inference", {"permutations", "seed", "alpha", "scheme"});
    cfg.permutations = get_unsigned(inference, "permutations", "inference", 500);
    if (cfg.permutations < 1) throw InputError("inference.permutations must be at least 1");
    cfg.seed = get_unsigned(inference, "seed", "inference", 0);
    cfg.alpha = get_number(inference, "alpha", "inference", 0.05);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw InputError("inference.alpha must lie in (0, 1)");
    cfg.scheme = scheme_from_string(get_string(inference, "scheme", "inference", "freedman_lane"));

    const json output = root.value("output", json::object());
    check_keys(output, "output", {"dir", "ball_table"});
    if (output.contains("dir")) cfg.out_dir = get_path(output, "dir", "output", base_dir);
    else cfg.out_dir = base_dir / "out";
    cfg.ball_table = get_bool(output, "ball_table", "output", true);

    const DesignSpec d = cfg.design();
    validate(d, cfg.hypothesis(d));
    cfg.hash = hex64(fnv1a64(root.dump()));
    return cfg;
}

json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_json_file(path), path.parent_path());
}

namespace {

ScenarioConfig parse_scenario(const json& obj, const std::string& where, const std::filesystem::path& base_dir) {
    check_keys(obj, where,
               {"id", "mesh", "icosphere_order", "icosphere_radius", "truth", "signal_amplitude", "noise_bandwidth",
                "noise_sd", "samples", "radius_cap", "permutations", "replicates", "alpha", "seed", "scheme",
                "require_sensitivity"});
    ScenarioConfig s;
    s.id = get_string(obj, "id", where, "");
    s.mesh_path = get_path(obj, "mesh", where, base_dir);
    s.icosphere_order = static_cast<int>(get_unsigned(obj, "icosphere_order", where, 6));
    s.icosphere_radius = get_number(obj, "icosphere_radius", where, 1.0);
    if (obj.contains("truth")) {
        const json& truth = obj.at("truth");
        check_keys(truth, where + ".truth", {"vertices", "patches"});
        if (truth.contains("vertices")) {
            for (double v : number_list(truth.at("vertices"), where + ".truth.vertices")) {
                if (v < 0 || v != std::floor(v)) throw InputError(where + ".truth.vertices must be vertex indices");
                s.truth_vertices.push_back(static_cast<std::size_t>(v));
            }
        }
        if (truth.contains("patches")) {
            const json& patches = truth.at("patches");
            if (!patches.is_array()) throw InputError(where + ".truth.patches must be an array");
            for (std::size_t k = 0; k < patches.size(); ++k) {
                const std::string pw = where + ".truth.patches[" + std::to_string(k) + "]";
                check_keys(patches[k], pw, {"center", "radius"});
                s.truth_patches.push_back({static_cast<std::size_t>(get_unsigned(patches[k], "center", pw, 0)),
                                           get_number(patches[k], "radius", pw, 0.0)});
            }
        }
    }
    s.signal_amplitude = get_number(obj, "signal_amplitude", where, s.signal_amplitude);
    s.noise_bandwidth = get_number(obj, "noise_bandwidth", where, s.noise_bandwidth);
    s.noise_sd = get_number(obj, "noise_sd", where, s.noise_sd);
    s.samples = get_unsigned(obj, "samples", where, s.samples);
    if (obj.contains("radius_cap")) s.radius_cap = parse_cap(obj.at("radius_cap"), where + ".radius_cap");
    s.permutations = get_unsigned(obj, "permutations", where, s.permutations);
    s.replicates = get_unsigned(obj, "replicates", where, s.replicates);
    s.alpha = get_number(obj, "alpha", where, s.alpha);
    s.seed = get_unsigned(obj, "seed", where, s.seed);
    s.scheme = scheme_from_string(get_string(obj, "scheme", where, to_string(s.scheme)));
    s.require_sensitivity = get_bool(obj, "require_sensitivity", where, false);
    validate(s);
    return s;
}

}  // namespace

std::vector<ScenarioConfig> parse_sweep(const json& root, const std::filesystem::path& base_dir) {
    check_keys(root, "sweep", {"defaults", "scenarios"});
    const json defaults = root.value("defaults", json::object());
    if (!defaults.is_object()) throw InputError("sweep.defaults must be a JSON object");
    if (!root.contains("scenarios") || !root.at("scenarios").is_array() || root.at("scenarios").empty()) {
        throw InputError("sweep.scenarios must be a non-empty array");
    }
    std::vector<ScenarioConfig> out;
    const json& list = root.at("scenarios");
    for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string where = "sweep.scenarios[" + std::to_string(k) + "]";
        if (!list[k].is_object()) throw InputError(where + " must be a JSON object");
        json merged = defaults;
        merged.update(list[k]);
        ScenarioConfig s = parse_scenario(merged, where, base_dir);
        if (s.id.empty()) s.id = std::to_string(k + 1);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<ScenarioConfig> load_sweep(const std::filesystem::path& path) {
    return parse_sweep(read_json_file(path), path.parent_path());
}

}  // namespace miwt
