#include "warpbridge/serialize.hpp"

#include <algorithm>
#include <initializer_list>
#include <sstream>

#include "warpbridge/error.hpp"
#include "warpbridge/sample_set.hpp"
#include "warpbridge/warp.hpp"

namespace warpbridge {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    require(j.is_object(), where + ": expected a JSON object");
    for (const auto& [key, _] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        require(ok, where + ": unknown key '" + key + "'");
    }
}

template <class T>
T get(const Json& j, const char* key, const std::string& where) {
    require(j.contains(key), where + ": missing key '" + std::string(key) + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, where + ": bad value for '" + key + "': " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

std::size_t get_count(const Json& j, const char* key, const std::string& where) {
    const auto v = get<long long>(j, key, where);
    require(v >= 0, where + ": '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

std::vector<double> flatten(const Json& rows, std::size_t cols, const std::string& where) {
    require(rows.is_array(), where + ": expected an array of rows");
    std::vector<double> out;
    for (const auto& r : rows) {
        require(r.is_array() && r.size() == cols, where + ": each row must have " + std::to_string(cols) + " entries");
        for (const auto& v : r) {
            require(v.is_number(), where + ": entries must be numbers");
            out.push_back(v.get<double>());
        }
    }
    return out;
}

Json rows(std::span<const double> flat, std::size_t cols) {
    Json out = Json::array();
    for (std::size_t i = 0; i < flat.size(); i += cols)
        out.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                          flat.begin() + static_cast<std::ptrdiff_t>(i + cols)));
    return out;
}

Json stats_json(const EstimatorStats& s) { return {{"bias", s.bias}, {"sd", s.sd}, {"rmse", s.rmse}}; }

} // namespace

Json parse_json(const std::string& text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::InvalidArgument, what + ": invalid JSON: " + e.what());
    }
}

Json to_json(const GaussianMixture& mix) {
    const std::size_t D = mix.dim();
    return {{"dim", D},
            {"K", mix.components()},
            {"weights", std::vector<double>(mix.weights().begin(), mix.weights().end())},
            {"means", rows(mix.means(), D)},
            {"scales", rows(mix.scales(), D)}};
}

GaussianMixture mixture_from_json(const Json& j) {
    const std::string where = "mixture";
    check_keys(j, {"dim", "K", "weights", "means", "scales"}, where);
    const std::size_t D = get_count(j, "dim", where);
    auto weights = get<std::vector<double>>(j, "weights", where);
    if (j.contains("K"))
        require(get_count(j, "K", where) == weights.size(), where + ": K does not match the number of weights");
    auto means = flatten(j.at("means"), D, where + ".means");
    auto scales = flatten(j.at("scales"), D, where + ".scales");
    require(means.size() == weights.size() * D && scales.size() == weights.size() * D,
            where + ": means and scales must have K rows");
    return GaussianMixture(std::move(weights), std::move(means), std::move(scales), D);
}

BuiltinSpec target_spec_from_json(const Json& j) {
    const std::string where = "target";
    require(j.is_object(), where + ": expected a JSON object");
    if (j.contains("preset")) {
        check_keys(j, {"preset", "log_c"}, where);
        BuiltinSpec spec = preset(get<std::string>(j, "preset", where));
        if (j.contains("log_c")) {
            const double c = get<double>(j, "log_c", where);
            std::visit([c](auto& s) { s.log_c = c; }, spec);
        }
        return spec;
    }
    const auto type = get<std::string>(j, "type", where);
    BuiltinSpec spec = [&]() -> BuiltinSpec {
        if (type == "gaussian_mixture") {
            check_keys(j, {"type", "mixture", "log_c"}, where);
            return GaussianMixtureTarget{mixture_from_json(j.at("mixture")), get_or(j, "log_c", 0.0, where)};
        }
        if (type == "banana") {
            check_keys(j, {"type", "curvature", "scale", "log_c"}, where);
            return BananaTarget{get_or(j, "curvature", 0.5, where), get_or(j, "scale", 1.0, where),
                                get_or(j, "log_c", 0.0, where)};
        }
        if (type == "skew_mixture") {
            check_keys(j, {"type", "dim", "weights", "locations", "scales", "shapes", "log_c"}, where);
            SkewMixtureTarget m;
            m.dim = get_count(j, "dim", where);
            m.weights = get<std::vector<double>>(j, "weights", where);
            m.locations = flatten(j.at("locations"), m.dim, where + ".locations");
            m.scales = flatten(j.at("scales"), m.dim, where + ".scales");
            m.shapes = flatten(j.at("shapes"), m.dim, where + ".shapes");
            m.log_c = get_or(j, "log_c", 0.0, where);
            return m;
        }
        fail(ErrorCode::InvalidArgument, where + ": unknown type '" + type + "'");
    }();
    validate(spec);
    return spec;
}

Json to_json(const BuiltinSpec& spec) {
    return std::visit(
        [](const auto& s) -> Json {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, GaussianMixtureTarget>) {
                return {{"type", "gaussian_mixture"}, {"mixture", to_json(s.mixture)}, {"log_c", s.log_c}};
            } else if constexpr (std::is_same_v<T, BananaTarget>) {
                return {{"type", "banana"}, {"curvature", s.curvature}, {"scale", s.scale}, {"log_c", s.log_c}};
            } else {
                return {{"type", "skew_mixture"},   {"dim", s.dim},
                        {"weights", s.weights},     {"locations", rows(s.locations, s.dim)},
                        {"scales", rows(s.scales, s.dim)}, {"shapes", rows(s.shapes, s.dim)},
                        {"log_c", s.log_c}};
            }
        },
        spec);
}

EMConfig em_config_from_json(const Json& j, EMConfig base) {
    const std::string where = "em";
    check_keys(j, {"K", "restarts", "max_iters", "tol"}, where);
    if (j.contains("K")) base.components = get_count(j, "K", where);
    if (j.contains("restarts")) base.restarts = get_count(j, "restarts", where);
    if (j.contains("max_iters")) base.max_iters = get_count(j, "max_iters", where);
    if (j.contains("tol")) base.rel_tol = get<double>(j, "tol", where);
    return base;
}

Json to_json(const EMResult& fit) {
    return {{"mixture", to_json(fit.mixture)},
            {"loglik", fit.loglik},
            {"penalized_loglik", fit.penalized_loglik},
            {"iterations", fit.iterations},
            {"restart_index", fit.restart_index},
            {"converged", fit.converged},
            {"rescued_components", fit.rescued_components}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
    const std::string where = "estimate config";
    check_keys(j, {"estimator", "K", "K2", "L", "m", "S", "em", "bridge_tol", "bridge_max_iters"}, where);
    PipelineConfig cfg;
    cfg.components = get_or<std::size_t>(j, "K", 1, where);
    if (j.contains("K2")) cfg.components2 = get_count(j, "K2", where);
    if (j.contains("L")) cfg.fit_size = get_count(j, "L", where);
    if (j.contains("m")) cfg.reference_size = get_count(j, "m", where);
    cfg.subsets = get_or<std::size_t>(j, "S", 5, where);
    if (j.contains("em")) cfg.em = em_config_from_json(j.at("em"));
    cfg.bridge.tol = get_or(j, "bridge_tol", cfg.bridge.tol, where);
    cfg.bridge.max_iters = get_or(j, "bridge_max_iters", cfg.bridge.max_iters, where);
    return cfg;
}

Json to_json(const EstimateReport& r) {
    Json mixtures = Json::array();
    for (const auto& m : r.mixtures) mixtures.push_back(to_json(m));
    return {{"lambda_hat", r.lambda_hat},
            {"variance_hat", r.variance_hat},
            {"half_estimates", r.half_estimates},
            {"subset_estimates", r.subset_estimates},
            {"converged", r.converged},
            {"mixtures", mixtures},
            {"warnings", r.warnings}};
}

Json timings_to_json(const EstimateReport& r) {
    return {{"t_em", r.timings.em}, {"t_bridge", r.timings.bridge}, {"t_total", r.timings.total}, {"pps", r.pps}};
}

ExperimentConfig experiment_from_json(const Json& j) {
    const std::string where = "experiment";
    check_keys(j, {"target", "target2", "estimator", "grid", "n", "reps", "em", "keep_raw"}, where);
    ExperimentConfig cfg;
    cfg.target = target_spec_from_json(j.at("target"));
    if (j.contains("target2")) cfg.target2 = target_spec_from_json(j.at("target2"));
    cfg.estimator = parse_estimator(get<std::string>(j, "estimator", where));
    cfg.n = get_count(j, "n", where);
    cfg.reps = get_count(j, "reps", where);
    cfg.keep_raw = get_or(j, "keep_raw", true, where);
    if (j.contains("em")) cfg.em = em_config_from_json(j.at("em"));
    require(j.contains("grid") && j.at("grid").is_array(), where + ": 'grid' must be an array of cells");
    for (const auto& c : j.at("grid")) {
        check_keys(c, {"K", "L_over_K", "m_over_n", "S"}, where + ".grid");
        GridCell cell;
        cell.components = get_or<std::size_t>(c, "K", 1, where + ".grid");
        if (c.contains("L_over_K")) cell.fit_per_component = get<double>(c, "L_over_K", where + ".grid");
        cell.reference_ratio = get_or(c, "m_over_n", 1.0, where + ".grid");
        cell.subsets = get_or<std::size_t>(c, "S", 5, where + ".grid");
        cfg.grid.push_back(cell);
    }
    return cfg;
}

Json to_json(const ReplicationReport& report) {
    Json cells = Json::array();
    for (const auto& c : report.cells) {
        Json cell = {{"K", c.cell.components},
                     {"L_over_K", c.cell.fit_per_component ? Json(*c.cell.fit_per_component) : Json(nullptr)},
                     {"m_over_n", c.cell.reference_ratio},
                     {"S", c.cell.subsets},
                     {"truth", c.truth},
                     {"completed", c.completed},
                     {"failures", c.failures},
                     {"failure_messages", c.failure_messages},
                     {"mean_variance_hat", c.mean_variance_hat}};
        cell.update(stats_json(c.stats));
        if (!c.estimates.empty()) {
            cell["estimates"] = c.estimates;
            cell["variance_hats"] = c.variance_hats;
            cell["half_estimates"] = c.half_estimates;
        }
        cells.push_back(std::move(cell));
    }
    return {{"cells", cells}};
}

Json timings_to_json(const ReplicationReport& report) {
    Json cells = Json::array();
    for (const auto& c : report.cells)
        cells.push_back({{"median_t_em", c.median_t_em}, {"median_t_total", c.median_t_total}, {"pps", c.pps}});
    return {{"cells", cells}};
}

std::string replication_table_csv(const ReplicationReport& report) {
    std::ostringstream out;
    out << "cell,K,L_over_K,m_over_n,S,completed,failures,truth,bias,sd,rmse,mean_variance_hat\n";
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const auto& c = report.cells[i];
        out << i << ',' << c.cell.components << ','
            << (c.cell.fit_per_component ? format_double(*c.cell.fit_per_component) : std::string("default")) << ','
            << format_double(c.cell.reference_ratio) << ',' << c.cell.subsets << ',' << c.completed << ','
            << c.failures << ',' << format_double(c.truth) << ',' << format_double(c.stats.bias) << ','
            << format_double(c.stats.sd) << ',' << format_double(c.stats.rmse) << ','
            << format_double(c.mean_variance_hat) << '\n';
    }
    return out.str();
}

ChainOptions chain_options_from_json(const Json& j) {
    const std::string where = "chain options";
    check_keys(j, {"steps", "thin", "max_lag", "max_stored"}, where);
    ChainOptions o;
    o.steps = get_or(j, "steps", o.steps, where);
    o.thin = get_or(j, "thin", o.thin, where);
    o.max_lag = get_or(j, "max_lag", o.max_lag, where);
    o.max_stored = get_or(j, "max_stored", o.max_stored, where);
    return o;
}

Json to_json(const ChainDiagnostics& d) {
    return {{"steps", d.steps},
            {"thin", d.thin},
            {"unique_points", d.unique_points},
            {"acf_coordinates", std::vector<std::vector<double>>(d.acf.begin(), d.acf.end() - 1)},
            {"acf_sum", d.acf.back()}};
}

Density density_from_json(const Json& j) {
    const std::string where = "density";
    require(j.is_object() && j.size() == 1,
            where + ": expected exactly one of standard_normal, mixture, target, warpu");
    if (j.contains("standard_normal")) return standard_normal_density(get_count(j, "standard_normal", where));
    if (j.contains("mixture")) return density_from_mixture(mixture_from_json(j.at("mixture")));
    if (j.contains("target")) return density_from_target(make_target(target_spec_from_json(j.at("target"))));
    if (j.contains("warpu")) {
        const auto& w = j.at("warpu");
        check_keys(w, {"target", "mixture"}, where + ".warpu");
        const auto target = make_target(target_spec_from_json(w.at("target")));
        const WarpSpec spec = MixtureWarp{mixture_from_json(w.at("mixture"))};
        return density_from_target(warped_target(spec, target));
    }
    fail(ErrorCode::InvalidArgument, where + ": unknown density kind '" + j.begin().key() + "'");
}

} // namespace warpbridge
