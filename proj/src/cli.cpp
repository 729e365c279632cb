#include "miwt/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>

#include <CLI11.hpp>
#include <json.hpp>

#include "miwt/error.hpp"
#include "miwt/evalsim.hpp"
#include "miwt/io.hpp"
#include "miwt/mesh.hpp"
#include "miwt/parallel.hpp"
#include "miwt/permute.hpp"
#include "miwt/random.hpp"

namespace miwt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

json cap_to_json(double cap) { return std::isfinite(cap) ? json(cap) : json("inf"); }

std::string cap_text(double cap) { return std::isfinite(cap) ? format_double(cap) : "inf"; }

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("invalid " + what + " '" + text + "'");
    }
    return value;
}

/// Command-line flag, then environment variable, then the fallback.
unsigned effective_threads(const std::optional<unsigned>& flag) {
    if (flag) return resolve_threads(*flag);
    if (auto v = env("MIWT_THREADS")) return resolve_threads(static_cast<unsigned>(parse_u64(*v, "MIWT_THREADS")));
    return resolve_threads(0);
}

std::uint64_t effective_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
    if (flag) return *flag;
    if (auto v = env("MIWT_SEED")) return parse_u64(*v, "MIWT_SEED");
    return fallback;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::shared_ptr<TriangulatedManifold> load_mesh(const ComponentConfig& c) {
    auto mesh = std::make_shared<TriangulatedManifold>(
        c.mesh_path.empty() ? build_icosphere(c.icosphere_order, c.icosphere_radius) : load_off(c.mesh_path));
    if (!c.edge_lengths.empty()) load_edge_lengths(*mesh, c.edge_lengths);
    mesh->compute_weights();
    return mesh;
}

std::string mesh_name(const ComponentConfig& c) {
    return c.mesh_path.empty() ? "icosphere(order " + std::to_string(c.icosphere_order) + ")" : c.mesh_path.string();
}

SignalMatrix load_signals(const RunConfig& cfg, const ProductDomain& domain) {
    const auto m = static_cast<Eigen::Index>(domain.size());
    if (cfg.format == SignalFormat::binary) {
        SignalMatrix values = read_signals_binary(cfg.signals);
        if (values.cols() != m) {
            throw InputError("signal file " + cfg.signals.string() + " has " + std::to_string(values.cols()) +
                             " columns, the domain has " + std::to_string(m) + " grid points");
        }
        return values;
    }
    SignalTable table = read_signals_csv(cfg.signals);
    if (static_cast<Eigen::Index>(table.point_ids.size()) != m) {
        throw InputError("signal file " + cfg.signals.string() + " has " + std::to_string(table.point_ids.size()) +
                         " columns, the domain has " + std::to_string(m) + " grid points");
    }
    // Columns are matched to grid points by ID, so any column order works.
    SignalMatrix values(table.values.rows(), m);
    std::vector<char> seen(static_cast<std::size_t>(m), 0);
    for (Eigen::Index c = 0; c < m; ++c) {
        const std::size_t id = parse_index(table.point_ids[static_cast<std::size_t>(c)], "signal header");
        if (id >= static_cast<std::size_t>(m) || seen[id]) {
            throw InputError("signal header of " + cfg.signals.string() + " must list each grid point ID 0.." +
                             std::to_string(m - 1) + " once");
        }
        seen[id] = 1;
        values.col(static_cast<Eigen::Index>(id)) = table.values.col(c);
    }
    return values;
}

std::string ball_key(const AdjustmentFamily& family, std::size_t index) {
    const auto parts = family.unravel(index);
    std::string key;
    for (std::size_t l = 0; l < parts.size(); ++l) {
        const auto& b = family.component(l).balls()[parts[l]];
        if (l > 0) key += '|';
        key += std::to_string(b.anchor) + ':' + std::to_string(b.size);
    }
    return key;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const fs::path& path) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == name) return c;
        }
        throw InputError(path.string() + " has no column '" + name + "'");
    }
};

CsvTable read_csv(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(split_csv_line(line));
        if (table.rows.back().size() != table.header.size()) {
            throw InputError(path.string() + ": row " + std::to_string(table.rows.size()) + " has the wrong width");
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_tessellate(int order, double radius, const fs::path& out_path, std::ostream& out) {
    if (order < 1) throw InputError("--order must be at least 1");
    if (!(radius > 0.0)) throw InputError("--radius must be positive");
    const TriangulatedManifold mesh = build_icosphere(order, radius);
    std::ostringstream text;
    write_off(text, mesh);
    write_file_atomic(out_path, text.str());
    out << "wrote " << out_path.string() << ": " << mesh.vertex_count() << " vertices, " << mesh.triangle_count()
        << " triangles\n";
    return kExitOk;
}

int cmd_distances(const std::optional<fs::path>& config_path, const std::optional<fs::path>& mesh_path, int order,
                  double radius, const std::optional<fs::path>& edge_lengths, const std::optional<fs::path>& out_path,
                  unsigned threads, std::ostream& out, std::ostream& err) {
    std::vector<ComponentConfig> jobs;
    if (config_path) {
        if (mesh_path || order > 0 || out_path) throw InputError("use either --config or --mesh/--order with --out");
        const RunConfig cfg = load_run_config(*config_path);
        for (const auto& c : cfg.components) {
            if (c.kind == ComponentKind::mesh && !c.distance_cache.empty()) jobs.push_back(c);
        }
        if (jobs.empty()) throw InputError("no mesh component of " + config_path->string() + " sets distance_cache");
    } else {
        if (!out_path) throw InputError("--out is required without --config");
        if (mesh_path.has_value() == (order > 0)) throw InputError("give exactly one of --mesh and --order");
        ComponentConfig c;
        if (mesh_path) c.mesh_path = *mesh_path;
        c.icosphere_order = order;
        c.icosphere_radius = radius;
        if (edge_lengths) c.edge_lengths = *edge_lengths;
        c.distance_cache = *out_path;
        jobs.push_back(c);
    }
    for (const auto& c : jobs) {
        const auto start = std::chrono::steady_clock::now();
        auto mesh = load_mesh(c);
        if (mesh->connected_component_count() > 1) {
            err << "warning: " << mesh_name(c) << " is disconnected; cross-component distances are infinite\n";
        }
        mesh->compute_distances(threads);
        mesh->distances().save(c.distance_cache);
        out << "wrote " << c.distance_cache.string() << ": " << mesh->vertex_count() << " x " << mesh->vertex_count()
            << " distances in " << format_double(std::round(seconds_since(start) * 1000.0) / 1000.0) << " s\n";
    }
    return kExitOk;
}

int cmd_test(RunConfig cfg, const std::optional<std::uint64_t>& seed_flag, unsigned threads,
             const std::optional<fs::path>& out_dir, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    cfg.seed = effective_seed(seed_flag, cfg.seed);
    if (out_dir) cfg.out_dir = *out_dir;

    const ProductDomain domain = build_domain(cfg, threads, err);
    const AdjustmentFamily family = enumerate_family(domain, cfg.membership_limit);
    const SignalMatrix signals = load_signals(cfg, domain);
    const DesignSpec design = cfg.design();
    const HypothesisSpec hypothesis = cfg.hypothesis(design);
    if (static_cast<std::size_t>(signals.rows()) != design.observations()) {
        throw InputError("signal file " + cfg.signals.string() + " has " + std::to_string(signals.rows()) +
                         " observations, the model has " + std::to_string(design.observations()));
    }
    const PermutationPlan plan = make_plan(design, hypothesis, cfg.permutations, cfg.seed, cfg.scheme);
    const NullDistribution null =
        null_distribution(signals, design, hypothesis, domain, family, plan, NullOptions{threads, false});
    const PValueFields p = pvalues(null, domain, family);

    const std::size_t L = domain.component_count();
    std::ostringstream points;
    points << "point_id";
    for (std::size_t l = 0; l < L; ++l) {
        if (domain.component(l).kind() == ComponentKind::mesh) {
            points << ",c" << l << "_vertex";
        } else {
            points << ",c" << l << "_index,c" << l << "_coord";
        }
    }
    points << ",T_obs,p,p_adjusted\n";
    std::size_t rejected = 0;
    for (std::size_t g = 0; g < domain.size(); ++g) {
        points << g;
        const auto idx = domain.unravel(g);
        for (std::size_t l = 0; l < L; ++l) {
            points << ',' << idx[l];
            if (auto coord = domain.component(l).coordinate(idx[l])) points << ',' << format_double(*coord);
        }
        points << ',' << format_double(null.observed_field[g]) << ',' << format_double(p.pointwise[g]) << ','
               << format_double(p.adjusted[g]) << '\n';
        rejected += p.adjusted[g] <= cfg.alpha;
    }

    fs::create_directories(cfg.out_dir);
    std::vector<std::string> outputs{"points.csv"};
    write_file_atomic(cfg.out_dir / "points.csv", points.str());

    if (cfg.ball_table) {
        FamilyIntegrator integrator(domain, family);
        const std::vector<double> ones(domain.size(), 1.0);
        // Measure of each ball: the integral of the constant 1.
        const std::vector<double> ball_weights = integrator.integrate(ones);
        std::ostringstream balls;
        balls << "ball_id";
        for (std::size_t l = 0; l < L; ++l) {
            balls << ",c" << l << "_anchor,c" << l << "_size,c" << l << "_center,c" << l << "_radius";
        }
        balls << ",weight,T_obs,p\n";
        for (std::size_t i = 0; i < family.size(); ++i) {
            balls << i;
            const auto parts = family.unravel(i);
            for (std::size_t l = 0; l < L; ++l) {
                const auto& b = family.component(l).balls()[parts[l]];
                balls << ',' << b.anchor << ',' << b.size << ',' << (b.center ? format_double(*b.center) : "") << ','
                      << format_double(b.radius());
            }
            balls << ',' << format_double(ball_weights[i]) << ',' << format_double(null.observed_balls[i]) << ','
                  << format_double(p.ballwise[i]) << '\n';
        }
        write_file_atomic(cfg.out_dir / "balls.csv", balls.str());
        outputs.push_back("balls.csv");
    }

    json manifest;
    manifest["command"] = "test";
    manifest["version"] = kVersion;
    manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                std::to_string(EIGEN_MINOR_VERSION);
    manifest["config_hash"] = cfg.hash;
    manifest["seed"] = cfg.seed;
    manifest["rng"] = kRngAlgorithm;
    manifest["permutations"] = cfg.permutations;
    manifest["scheme"] = to_string(cfg.scheme);
    manifest["statistic"] = to_string(cfg.statistic);
    manifest["alpha"] = cfg.alpha;
    manifest["radius_caps"] = json::array();
    manifest["components"] = json::array();
    for (std::size_t l = 0; l < L; ++l) {
        manifest["radius_caps"].push_back(cap_to_json(domain.component(l).radius_cap()));
        manifest["components"].push_back({{"kind", to_string(domain.component(l).kind())},
                                          {"points", domain.component(l).size()},
                                          {"balls", family.component(l).size()}});
    }
    manifest["grid_points"] = domain.size();
    manifest["observations"] = signals.rows();
    manifest["family_size"] = family.size();
    manifest["memberships"] = static_cast<std::uint64_t>(family.membership_count());
    manifest["rejected_points"] = rejected;
    manifest["outputs"] = outputs;
    manifest["wall_time_seconds"] = seconds_since(start);
    write_file_atomic(cfg.out_dir / "manifest.json", manifest.dump(2) + "\n");

    out << domain.size() << " grid points, " << family.size() << " balls, B = " << cfg.permutations << ": "
        << rejected << " points with adjusted p <= " << format_double(cfg.alpha) << "\n";
    out << "wrote " << (cfg.out_dir / "points.csv").string() << "\n";
    return kExitOk;
}

int cmd_adjust(RunConfig cfg, const std::vector<std::string>& caps, unsigned threads,
               const std::optional<fs::path>& out_dir, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    if (out_dir) cfg.out_dir = *out_dir;
    const json manifest = read_json_file(cfg.out_dir / "manifest.json");
    const json& old_caps = manifest.at("radius_caps");
    if (old_caps.size() != cfg.components.size()) throw InputError("manifest does not match the configuration");
    if (!caps.empty() && caps.size() != cfg.components.size()) {
        throw InputError("give one --cap per domain component (" + std::to_string(cfg.components.size()) + ")");
    }
    for (std::size_t l = 0; l < cfg.components.size(); ++l) {
        const double old_cap = parse_cap(old_caps[l], "manifest radius_caps");
        if (!caps.empty()) cfg.components[l].radius_cap = parse_double(caps[l], "--cap");
        if (!(cfg.components[l].radius_cap > 0.0)) throw InputError("--cap must be positive");
        if (cfg.components[l].radius_cap > old_cap) {
            throw InputError("component " + std::to_string(l) + ": cap " + cap_text(cfg.components[l].radius_cap) +
                             " exceeds the cap " + cap_text(old_cap) + " of the cached run; rerun 'test' instead");
        }
    }

    const ProductDomain domain = build_domain(cfg, threads, err);
    const AdjustmentFamily family = enumerate_family(domain, cfg.membership_limit);

    const fs::path balls_path = cfg.out_dir / "balls.csv";
    const CsvTable balls = read_csv(balls_path);
    const std::size_t L = domain.component_count();
    std::vector<std::size_t> anchor_col(L), size_col(L);
    for (std::size_t l = 0; l < L; ++l) {
        anchor_col[l] = balls.column("c" + std::to_string(l) + "_anchor", balls_path);
        size_col[l] = balls.column("c" + std::to_string(l) + "_size", balls_path);
    }
    const std::size_t p_col = balls.column("p", balls_path);
    std::unordered_map<std::string, double> cached;
    cached.reserve(balls.rows.size());
    for (const auto& row : balls.rows) {
        std::string key;
        for (std::size_t l = 0; l < L; ++l) {
            if (l > 0) key += '|';
            key += row[anchor_col[l]] + ':' + row[size_col[l]];
        }
        cached.emplace(std::move(key), parse_double(row[p_col], balls_path.string()));
    }
    std::vector<double> ballwise(family.size());
    for (std::size_t i = 0; i < family.size(); ++i) {
        const auto it = cached.find(ball_key(family, i));
        if (it == cached.end()) throw InputError("ball " + ball_key(family, i) + " is missing from " + balls_path.string());
        ballwise[i] = it->second;
    }
    const auto adjusted = max_over_covering_balls<double>(domain, family, ballwise);

    const fs::path points_path = cfg.out_dir / "points.csv";
    const CsvTable points = read_csv(points_path);
    if (points.rows.size() != domain.size()) throw InputError(points_path.string() + " does not match the domain");
    const std::size_t pw_col = points.column("p", points_path);
    std::ostringstream csv;
    csv << "point_id,p,p_adjusted\n";
    std::size_t rejected = 0;
    for (std::size_t g = 0; g < domain.size(); ++g) {
        csv << g << ',' << points.rows[g][pw_col] << ',' << format_double(adjusted[g]) << '\n';
        rejected += adjusted[g] <= cfg.alpha;
    }
    write_file_atomic(cfg.out_dir / "adjusted.csv", csv.str());

    json m;
    m["command"] = "adjust";
    m["version"] = kVersion;
    m["config_hash"] = cfg.hash;
    m["source_manifest"] = "manifest.json";
    m["radius_caps"] = json::array();
    for (std::size_t l = 0; l < L; ++l) m["radius_caps"].push_back(cap_to_json(domain.component(l).radius_cap()));
    m["family_size"] = family.size();
    m["rejected_points"] = rejected;
    m["wall_time_seconds"] = seconds_since(start);
    write_file_atomic(cfg.out_dir / "adjust_manifest.json", m.dump(2) + "\n");

    out << family.size() << " balls under the new caps: " << rejected << " points with adjusted p <= "
        << format_double(cfg.alpha) << "\n";
    out << "wrote " << (cfg.out_dir / "adjusted.csv").string() << "\n";
    return kExitOk;
}

std::string rate_text(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

int cmd_simulate(const fs::path& config_path, const std::optional<std::uint64_t>& seed_flag, unsigned threads,
                 const std::optional<fs::path>& out_dir, const std::optional<fs::path>& out_file, std::ostream& out) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<ScenarioConfig> scenarios = load_sweep(config_path);
    const json raw = read_json_file(config_path);
    std::optional<std::uint64_t> seed = seed_flag;
    if (!seed) {
        if (auto v = env("MIWT_SEED")) seed = parse_u64(*v, "MIWT_SEED");
    }
    if (seed) {
        for (auto& s : scenarios) s.seed = *seed;
    }
    const fs::path target = out_file ? *out_file : (out_dir ? *out_dir : config_path.parent_path() / "out") / "simulation.csv";

    std::ostringstream csv;
    csv << "scenario,sensitivity,fwer,false_positive_rate,false_discovery_rate\n";
    json rows = json::array();
    for (const auto& s : scenarios) {
        const ScenarioResult r = run_scenario(s, threads);
        csv << s.id << ',' << rate_text(r.rates.sensitivity) << ',' << format_double(r.rates.fwer) << ','
            << format_double(r.rates.false_positive_rate) << ',' << format_double(r.rates.false_discovery_rate)
            << '\n';
        rows.push_back({{"scenario", s.id}, {"seed", s.seed}, {"family_size", r.family_size}});
        out << "scenario " << s.id << ": sensitivity " << rate_text(r.rates.sensitivity) << ", FWER "
            << format_double(r.rates.fwer) << "\n";
    }
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    write_file_atomic(target, csv.str());

    json m;
    m["command"] = "simulate";
    m["version"] = kVersion;
    m["config_hash"] = hex64(fnv1a64(raw.dump()));
    m["rng"] = kRngAlgorithm;
    m["scenarios"] = rows;
    m["wall_time_seconds"] = seconds_since(start);
    fs::path manifest_path = target;
    manifest_path.replace_extension(".manifest.json");
    write_file_atomic(manifest_path, m.dump(2) + "\n");
    out << "wrote " << target.string() << "\n";
    return kExitOk;
}

}  // namespace

ProductDomain build_domain(const RunConfig& config, unsigned threads, std::ostream& log) {
    std::vector<ComponentGrid> grids;
    for (const auto& c : config.components) {
        switch (c.kind) {
            case ComponentKind::mesh: {
                auto mesh = load_mesh(c);
                if (const std::size_t parts = mesh->connected_component_count(); parts > 1) {
                    log << "warning: " << mesh_name(c) << " has " << parts
                        << " connected components; balls never cross between them\n";
                }
                if (!c.distance_cache.empty() && fs::exists(c.distance_cache)) {
                    DistanceMatrix d = DistanceMatrix::load(c.distance_cache);
                    if (d.size() != mesh->vertex_count()) {
                        throw InputError("distance cache " + c.distance_cache.string() + " holds " +
                                         std::to_string(d.size()) + " vertices, the mesh has " +
                                         std::to_string(mesh->vertex_count()));
                    }
                    mesh->set_distances(std::move(d));
                } else {
                    mesh->compute_distances(threads);
                }
                grids.push_back(ComponentGrid::from_mesh(std::move(mesh), c.radius_cap));
                break;
            }
            case ComponentKind::circle:
                grids.push_back(ComponentGrid::circle(c.points, c.circumference, c.radius_cap));
                break;
            case ComponentKind::interval:
                grids.push_back(ComponentGrid::interval(c.points, c.lower, c.upper, c.radius_cap));
                break;
        }
    }
    return ProductDomain(std::move(grids));
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Local inference on manifold domains with ball-wise adjusted permutation p-values", "miwt"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::optional<unsigned> threads;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> config_path, out_dir, out_path, mesh_path, edge_lengths;
    int order = 0;
    double radius = 1.0;
    std::vector<std::string> caps;

    auto* tessellate = app.add_subcommand("tessellate", "Write an icosphere mesh as OFF");
    tessellate->add_option("--order", order, "Subdivision order (>= 1)")->required();
    tessellate->add_option("--radius", radius, "Sphere radius")->capture_default_str();
    tessellate->add_option("--out", out_path, "Output OFF file")->required();

    auto* distances = app.add_subcommand("distances", "Precompute geodesic distance caches");
    distances->add_option("--config", config_path, "Run config; caches every mesh with distance_cache");
    distances->add_option("--mesh", mesh_path, "OFF mesh");
    distances->add_option("--order", order, "Icosphere order instead of --mesh");
    distances->add_option("--radius", radius, "Icosphere radius");
    distances->add_option("--edge-lengths", edge_lengths, "CSV of i,j,length overrides");
    distances->add_option("--out", out_path, "Cache file");
    distances->add_option("--threads", threads, "Worker threads (0 = all cores)");

    auto* test = app.add_subcommand("test", "Run the permutation test and write p-value tables");
    test->add_option("--config", config_path, "Run config (JSON)")->required();
    test->add_option("--seed", seed, "Override the RNG seed");
    test->add_option("--threads", threads, "Worker threads (0 = all cores)");
    test->add_option("--out-dir", out_dir, "Override the output directory");

    auto* adjust = app.add_subcommand("adjust", "Re-adjust cached ball-wise p-values under smaller caps");
    adjust->add_option("--config", config_path, "Run config (JSON) of the cached run")->required();
    adjust->add_option("--cap", caps, "New radius cap per component, in order (number or inf)");
    adjust->add_option("--threads", threads, "Worker threads (0 = all cores)");
    adjust->add_option("--out-dir", out_dir, "Directory of the cached run");

    auto* simulate = app.add_subcommand("simulate", "Run a simulation sweep and write error rates");
    simulate->add_option("--config", config_path, "Sweep config (JSON)")->required();
    simulate->add_option("--seed", seed, "Override the seed of every scenario");
    simulate->add_option("--threads", threads, "Worker threads (0 = all cores)");
    simulate->add_option("--out-dir", out_dir, "Output directory (simulation.csv)");
    simulate->add_option("--out", out_path, "Output CSV file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        const unsigned workers = effective_threads(threads);
        if (tessellate->parsed()) return cmd_tessellate(order, radius, *out_path, out);
        if (distances->parsed()) {
            return cmd_distances(config_path, mesh_path, order, radius, edge_lengths, out_path, workers, out, err);
        }
        if (test->parsed()) return cmd_test(load_run_config(*config_path), seed, workers, out_dir, out, err);
        if (adjust->parsed()) return cmd_adjust(load_run_config(*config_path), caps, workers, out_dir, out, err);
        if (simulate->parsed()) return cmd_simulate(*config_path, seed, workers, out_dir, out_path, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const ComputeError& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompute;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompute;
    }
    return kExitInput;
}

}  // namespace miwt
