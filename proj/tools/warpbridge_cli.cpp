// Command-line front end over the warpbridge C API.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "warpbridge/warpbridge.h"

namespace {

struct CliError : std::runtime_error {
    CliError(int status, const std::string& msg) : std::runtime_error(msg), status(status) {}
    int status;
};

void check(wb_status s, const std::string& what) {
    if (s != WB_OK) throw CliError(static_cast<int>(s), what + ": " + wb_last_error());
}

struct Freer {
    void operator()(wb_samples* p) const { wb_samples_free(p); }
    void operator()(wb_mixture* p) const { wb_mixture_free(p); }
    void operator()(wb_target* p) const { wb_target_free(p); }
    void operator()(char* p) const { wb_string_free(p); }
};
using Samples = std::unique_ptr<wb_samples, Freer>;
using Mixture = std::unique_ptr<wb_mixture, Freer>;
using Target = std::unique_ptr<wb_target, Freer>;
using CString = std::unique_ptr<char, Freer>;

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CliError(WB_ERR_IO, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Writes to `path`, or to standard output when the path is "-".
void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw CliError(WB_ERR_IO, "cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw CliError(WB_ERR_IO, "failed writing '" + path + "'");
}

void write_owned(const std::string& path, char* text) {
    CString owned(text);
    if (!path.empty() && owned) write_text(path, owned.get());
}

Samples load_samples(const std::string& path) {
    wb_samples* s = nullptr;
    check(wb_samples_read_csv(path.c_str(), &s), "reading samples");
    return Samples(s);
}

Mixture load_mixture(const std::string& path) {
    wb_mixture* m = nullptr;
    check(wb_mixture_from_json(read_file(path).c_str(), &m), "reading mixture '" + path + "'");
    return Mixture(m);
}

/// Where the unnormalized density comes from: a JSON spec file, a named preset, or an evaluator process.
struct TargetSource {
    std::string spec_file;
    std::string preset;
    std::string external;
    std::size_t dim = 0;
    double timeout = 60.0;

    void add_to(CLI::App* app, const std::string& suffix = "") {
        auto* a = app->add_option("--target" + suffix, spec_file, "target spec (JSON file)");
        auto* b = app->add_option("--preset" + suffix, preset, "built-in target preset name");
        auto* c = app->add_option("--external" + suffix, external, "external evaluator command");
        a->excludes(b)->excludes(c);
        b->excludes(c);
        app->add_option("--dim" + suffix, dim, "dimension served by the external evaluator");
        app->add_option("--timeout" + suffix, timeout, "external evaluator timeout per batch, seconds")
            ->capture_default_str();
    }

    Target open() const {
        wb_target* t = nullptr;
        if (!spec_file.empty()) {
            check(wb_target_from_json(read_file(spec_file).c_str(), &t), "target '" + spec_file + "'");
        } else if (!preset.empty()) {
            const std::string json = nlohmann::json{{"preset", preset}}.dump();
            check(wb_target_from_json(json.c_str(), &t), "preset '" + preset + "'");
        } else if (!external.empty()) {
            if (dim == 0) throw CliError(WB_ERR_INVALID_ARGUMENT, "--dim is required with --external");
            check(wb_target_external(external.c_str(), dim, timeout, &t), "starting external evaluator");
        } else {
            throw CliError(WB_ERR_INVALID_ARGUMENT, "one of --target, --preset or --external is required");
        }
        return Target(t);
    }
};

using Json = nlohmann::json;

/// The JSON object in `path` (or {} when empty), for command-line overrides.
Json load_object(const std::string& path, const std::string& what) {
    if (path.empty()) return Json::object();
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw CliError(WB_ERR_INVALID_ARGUMENT, what + " '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw CliError(WB_ERR_INVALID_ARGUMENT, what + " '" + path + "' must be a JSON object");
    return j;
}

std::vector<double> parse_point(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw CliError(WB_ERR_INVALID_ARGUMENT, "bad coordinate '" + item + "' in --start");
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Warp-U bridge sampling: normalizing constants, mixture fits, transforms and samplers"};
    app.require_subcommand(1);
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "base seed for all randomness")->capture_default_str();
    app.set_version_flag("--version", std::string(wb_version()));

    // fit
    auto* fit = app.add_subcommand("fit", "fit a penalized Gaussian mixture to samples");
    std::string fit_samples, fit_out = "-", fit_report, fit_config;
    std::size_t fit_k = 0, fit_restarts = 0, threads = 1;
    fit->add_option("--samples", fit_samples, "input samples (CSV)")->required();
    fit->add_option("--components,-K", fit_k, "number of components");
    fit->add_option("--restarts", fit_restarts, "EM restarts (even)");
    fit->add_option("--config", fit_config, "EM config (JSON file)");
    fit->add_option("--out", fit_out, "mixture output (JSON)")->capture_default_str();
    fit->add_option("--report", fit_report, "fit summary output (JSON)");
    fit->add_option("--threads", threads, "worker threads")->capture_default_str();

    // transform
    auto* transform = app.add_subcommand("transform", "Warp-U transform samples with a mixture");
    std::string tr_samples, tr_mixture, tr_out = "-";
    transform->add_option("--samples", tr_samples, "input samples (CSV)")->required();
    transform->add_option("--mixture", tr_mixture, "mixture (JSON)")->required();
    transform->add_option("--out", tr_out, "warped samples with a 1-based psi column (CSV)")->capture_default_str();
    transform->add_option("--threads", threads, "worker threads")->capture_default_str();

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate log c of one unnormalized density");
    TargetSource est_target;
    est_target.add_to(estimate);
    std::string est_samples, est_config, est_out = "-", est_timings, est_estimator;
    std::size_t est_k = 0;
    estimate->add_option("--samples", est_samples, "draws from the target (CSV)")->required();
    estimate->add_option("--config", est_config, "estimate config (JSON file)");
    estimate->add_option("--estimator", est_estimator, "warpu or mix (overrides the config)");
    estimate->add_option("--components,-K", est_k, "mixture components (overrides the config)");
    estimate->add_option("--out", est_out, "report (JSON)")->capture_default_str();
    estimate->add_option("--timings", est_timings, "wall-clock timings (JSON)");

    // estimate-ratio
    auto* ratio = app.add_subcommand("estimate-ratio", "estimate log(c1/c2) of two unnormalized densities");
    TargetSource r_t1, r_t2;
    r_t1.add_to(ratio, "1");
    r_t2.add_to(ratio, "2");
    std::string r_s1, r_s2, r_proc = "U_direct", r_config, r_out = "-", r_timings;
    std::size_t r_k = 0;
    ratio->add_option("--samples1", r_s1, "draws from target 1 (CSV)")->required();
    ratio->add_option("--samples2", r_s2, "draws from target 2 (CSV)")->required();
    ratio->add_option("--procedure", r_proc, "U_diff, mix_diff or U_direct")->capture_default_str();
    ratio->add_option("--config", r_config, "estimate config (JSON file)");
    ratio->add_option("--components,-K", r_k, "mixture components (overrides the config)");
    ratio->add_option("--out", r_out, "report (JSON)")->capture_default_str();
    ratio->add_option("--timings", r_timings, "wall-clock timings (JSON)");

    // sample
    auto* sample = app.add_subcommand("sample", "run the Warp-U Markov chain");
    TargetSource s_target;
    s_target.add_to(sample);
    std::string s_mixture, s_pilot, s_start, s_options, s_out = "-", s_diag;
    std::size_t s_k = 0, s_steps = 0, s_thin = 0;
    sample->add_option("--mixture", s_mixture, "mixture defining the move (JSON)");
    sample->add_option("--fit-from", s_pilot, "fit the mixture to these pilot draws instead (CSV)");
    sample->add_option("--components,-K", s_k, "components when fitting from pilot draws");
    sample->add_option("--start", s_start, "comma-separated starting point (default: origin)");
    sample->add_option("--options", s_options, "chain options (JSON file)");
    sample->add_option("--steps", s_steps, "number of transitions (overrides the options)");
    sample->add_option("--thin", s_thin, "keep every thin-th state (overrides the options)");
    sample->add_option("--out", s_out, "chain states (CSV)")->capture_default_str();
    sample->add_option("--diagnostics", s_diag, "diagnostics (JSON)");

    // replicate
    auto* replicate = app.add_subcommand("replicate", "run a replication study");
    std::string rep_config, rep_out = "-", rep_table, rep_timings;
    replicate->add_option("--config", rep_config, "experiment config (JSON file)")->required();
    replicate->add_option("--out", rep_out, "report (JSON)")->capture_default_str();
    replicate->add_option("--table", rep_table, "per-cell summary table (CSV)");
    replicate->add_option("--timings", rep_timings, "wall-clock timings per cell (JSON)");
    replicate->add_option("--threads", threads, "worker threads; results do not depend on it")->capture_default_str();

    // divergence
    auto* divergence = app.add_subcommand("divergence", "divergences between two densities");
    std::string d_spec, d_out = "-";
    divergence->add_option("--spec", d_spec, "divergence spec (JSON file)")->required();
    divergence->add_option("--out", d_out, "divergence values (JSON)")->capture_default_str();

    // draw
    auto* draw = app.add_subcommand("draw", "draw i.i.d. samples from a built-in target");
    TargetSource dr_target;
    dr_target.add_to(draw);
    std::size_t dr_n = 1000;
    std::string dr_out = "-";
    draw->add_option("--n", dr_n, "number of draws")->capture_default_str();
    draw->add_option("--out", dr_out, "samples (CSV)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            auto data = load_samples(fit_samples);
            Json cfg = load_object(fit_config, "EM config");
            if (fit_k) cfg["K"] = fit_k;
            if (fit_restarts) cfg["restarts"] = fit_restarts;
            wb_mixture* m = nullptr;
            char* report = nullptr;
            check(wb_fit(data.get(), cfg.dump().c_str(), seed, threads, &m, &report), "fit");
            Mixture mix(m);
            write_owned(fit_report, report);
            char* json = nullptr;
            check(wb_mixture_to_json(mix.get(), &json), "fit");
            write_owned(fit_out, json);
        } else if (*transform) {
            auto data = load_samples(tr_samples);
            auto mix = load_mixture(tr_mixture);
            wb_samples* out = nullptr;
            std::vector<int> psi(wb_samples_size(data.get()));
            check(wb_transform(mix.get(), data.get(), seed, threads, &out, psi.data()), "transform");
            Samples warped(out);
            const std::string path = tr_out == "-" ? "/dev/stdout" : tr_out;
            check(wb_samples_write_csv_with_column(warped.get(), psi.data(), "psi", path.c_str()), "transform");
        } else if (*estimate) {
            auto target = est_target.open();
            auto draws = load_samples(est_samples);
            Json cfg = load_object(est_config, "estimate config");
            if (!est_estimator.empty()) cfg["estimator"] = est_estimator;
            if (est_k) cfg["K"] = est_k;
            char *report = nullptr, *timings = nullptr;
            check(wb_estimate(target.get(), draws.get(), cfg.dump().c_str(), seed, &report, &timings), "estimate");
            write_owned(est_timings, timings);
            write_owned(est_out, report);
        } else if (*ratio) {
            auto t1 = r_t1.open();
            auto t2 = r_t2.open();
            auto d1 = load_samples(r_s1);
            auto d2 = load_samples(r_s2);
            Json cfg = load_object(r_config, "estimate config");
            if (r_k) cfg["K"] = r_k;
            char *report = nullptr, *timings = nullptr;
            check(wb_estimate_ratio(t1.get(), d1.get(), t2.get(), d2.get(), r_proc.c_str(), cfg.dump().c_str(), seed,
                                    &report, &timings),
                  "estimate-ratio");
            write_owned(r_timings, timings);
            write_owned(r_out, report);
        } else if (*sample) {
            auto target = s_target.open();
            Mixture mix;
            if (!s_mixture.empty() == !s_pilot.empty())
                throw CliError(WB_ERR_INVALID_ARGUMENT, "give exactly one of --mixture or --fit-from");
            if (!s_mixture.empty()) {
                mix = load_mixture(s_mixture);
            } else {
                auto pilot = load_samples(s_pilot);
                const std::string cfg = Json{{"K", s_k ? s_k : 1}}.dump();
                wb_mixture* m = nullptr;
                check(wb_fit(pilot.get(), cfg.c_str(), seed, 1, &m, nullptr), "fitting pilot draws");
                mix.reset(m);
            }
            const std::size_t dim = wb_target_dim(target.get());
            std::vector<double> w0 = s_start.empty() ? std::vector<double>(dim, 0.0) : parse_point(s_start);
            Json opts = load_object(s_options, "chain options");
            if (s_steps) opts["steps"] = s_steps;
            if (s_thin) opts["thin"] = s_thin;
            wb_samples* chain = nullptr;
            char* diag = nullptr;
            check(wb_sample_chain(target.get(), mix.get(), w0.data(), w0.size(), opts.dump().c_str(), seed, &chain, &diag),
                  "sample");
            Samples states(chain);
            write_owned(s_diag, diag);
            const std::string path = s_out == "-" ? "/dev/stdout" : s_out;
            check(wb_samples_write_csv(states.get(), path.c_str()), "sample");
        } else if (*replicate) {
            const std::string cfg = read_file(rep_config);
            char *report = nullptr, *table = nullptr, *timings = nullptr;
            check(wb_replicate(cfg.c_str(), seed, threads, &report, &table, &timings), "replicate");
            write_owned(rep_table, table);
            write_owned(rep_timings, timings);
            write_owned(rep_out, report);
        } else if (*divergence) {
            const std::string spec = read_file(d_spec);
            char* result = nullptr;
            check(wb_divergence(spec.c_str(), seed, &result), "divergence");
            write_owned(d_out, result);
        } else if (*draw) {
            auto target = dr_target.open();
            wb_samples* s = nullptr;
            check(wb_target_sample(target.get(), dr_n, seed, &s), "draw");
            Samples draws(s);
            const std::string path = dr_out == "-" ? "/dev/stdout" : dr_out;
            check(wb_samples_write_csv(draws.get(), path.c_str()), "draw");
        }
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.status == 0 ? 1 : e.status + 1;
    }
    return 0;
}
