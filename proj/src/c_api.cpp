#include "warpbridge/warpbridge.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>

#include "warpbridge/error.hpp"
#include "warpbridge/external_evaluator.hpp"
#include "warpbridge/serialize.hpp"
#include "warpbridge/warp.hpp"

struct wb_samples {
    warpbridge::SampleSet set;
};
struct wb_mixture {
    warpbridge::GaussianMixture mix;
};
struct wb_target {
    warpbridge::TargetDensity target;
};

namespace {

using namespace warpbridge;

thread_local std::string g_last_error;

wb_status to_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return WB_ERR_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return WB_ERR_DIMENSION_MISMATCH;
    case ErrorCode::Io: return WB_ERR_IO;
    case ErrorCode::Numeric: return WB_ERR_NUMERIC;
    case ErrorCode::Convergence: return WB_ERR_CONVERGENCE;
    case ErrorCode::Protocol: return WB_ERR_PROTOCOL;
    case ErrorCode::Internal: return WB_ERR_INTERNAL;
    }
    return WB_ERR_INTERNAL;
}

template <class F>
wb_status guarded(F&& body) {
    try {
        body();
        return WB_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return WB_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return WB_ERR_INTERNAL;
    }
}

void need(const void* p, const char* name) {
    if (p == nullptr) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void emit(char** out, const std::string& s) {
    if (out != nullptr) *out = dup_string(s);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json parse_optional(const char* text, const char* what) {
    return text == nullptr || *text == '\0' ? Json::object() : parse_json(text, what);
}

} // namespace

extern "C" {

const char* wb_version(void) { return "0.1.0"; }
const char* wb_last_error(void) { return g_last_error.c_str(); }
void wb_string_free(char* s) { std::free(s); }

wb_status wb_samples_create(size_t dim, size_t n, const double* values, wb_samples** out) {
    return guarded([&] {
        need(out, "out");
        need(values, "values");
        require(dim >= 1, "samples: dim must be at least 1");
        *out = new wb_samples{SampleSet(dim, std::vector<double>(values, values + dim * n))};
    });
}

wb_status wb_samples_read_csv(const char* path, wb_samples** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new wb_samples{read_csv(std::string(path))};
    });
}

wb_status wb_samples_write_csv(const wb_samples* s, const char* path) {
    return guarded([&] {
        need(s, "samples");
        need(path, "path");
        write_csv(std::string(path), s->set);
    });
}

wb_status wb_samples_write_csv_with_column(const wb_samples* s, const int* column, const char* column_name,
                                           const char* path) {
    return guarded([&] {
        need(s, "samples");
        need(column, "column");
        need(column_name, "column_name");
        need(path, "path");
        std::ofstream f(path, std::ios::binary);
        if (!f) fail(ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
        write_csv_with_column(f, s->set, std::span<const int>(column, s->set.size()), column_name);
        if (!f) fail(ErrorCode::Io, std::string("failed writing '") + path + "'");
    });
}

size_t wb_samples_size(const wb_samples* s) { return s ? s->set.size() : 0; }
size_t wb_samples_dim(const wb_samples* s) { return s ? s->set.dim() : 0; }
const double* wb_samples_data(const wb_samples* s) { return s ? s->set.values().data() : nullptr; }
void wb_samples_free(wb_samples* s) { delete s; }

wb_status wb_mixture_from_json(const char* json, wb_mixture** out) {
    return guarded([&] {
        need(json, "json");
        need(out, "out");
        *out = new wb_mixture{mixture_from_json(parse_json(json, "mixture"))};
    });
}

wb_status wb_mixture_to_json(const wb_mixture* m, char** json_out) {
    return guarded([&] {
        need(m, "mixture");
        need(json_out, "json_out");
        emit(json_out, dump(to_json(m->mix)));
    });
}

wb_status wb_mixture_log_pdf(const wb_mixture* m, const double* x, size_t dim, double* out) {
    return guarded([&] {
        need(m, "mixture");
        need(x, "x");
        need(out, "out");
        *out = m->mix.log_pdf(std::span<const double>(x, dim));
    });
}

size_t wb_mixture_dim(const wb_mixture* m) { return m ? m->mix.dim() : 0; }
void wb_mixture_free(wb_mixture* m) { delete m; }

wb_status wb_target_from_json(const char* spec_json, wb_target** out) {
    return guarded([&] {
        need(spec_json, "spec_json");
        need(out, "out");
        *out = new wb_target{make_target(target_spec_from_json(parse_json(spec_json, "target")))};
    });
}

wb_status wb_target_external(const char* command, size_t dim, double timeout_seconds, wb_target** out) {
    return guarded([&] {
        need(command, "command");
        need(out, "out");
        ExternalEvaluatorOptions opts;
        opts.command = command;
        opts.dim = dim;
        if (timeout_seconds > 0.0)
            opts.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_seconds * 1000.0));
        *out = new wb_target{external_target(std::make_shared<ExternalEvaluator>(opts))};
    });
}

size_t wb_target_dim(const wb_target* t) { return t ? t->target.dim() : 0; }

wb_status wb_target_sample(const wb_target* t, size_t n, uint64_t seed, wb_samples** out) {
    return guarded([&] {
        need(t, "target");
        need(out, "out");
        *out = new wb_samples{t->target.sample(n, seed)};
    });
}

void wb_target_free(wb_target* t) { delete t; }

wb_status wb_fit(const wb_samples* data, const char* config_json, uint64_t seed, size_t threads,
                 wb_mixture** mixture_out, char** fit_json) {
    return guarded([&] {
        need(data, "data");
        need(mixture_out, "mixture_out");
        EMConfig cfg = em_config_from_json(parse_optional(config_json, "em config"));
        cfg.seed = seed;
        cfg.threads = threads;
        const auto fit = multi_start_fit(data->set, cfg);
        emit(fit_json, dump(to_json(fit)));
        *mixture_out = new wb_mixture{fit.mixture};
    });
}

wb_status wb_transform(const wb_mixture* m, const wb_samples* data, uint64_t seed, size_t threads, wb_samples** out,
                       int* psi_out) {
    return guarded([&] {
        need(m, "mixture");
        need(data, "data");
        need(out, "out");
        auto warped = warp_samples(MixtureWarp{m->mix}, data->set, seed, threads);
        if (psi_out != nullptr)
            for (std::size_t i = 0; i < warped.labels.size(); ++i) psi_out[i] = warped.labels[i] + 1;
        *out = new wb_samples{std::move(warped.points)};
    });
}

wb_status wb_estimate(const wb_target* t, const wb_samples* draws, const char* config_json, uint64_t seed,
                      char** report_json, char** timings_json) {
    return guarded([&] {
        need(t, "target");
        need(draws, "draws");
        need(report_json, "report_json");
        const Json cfg_json = parse_optional(config_json, "estimate config");
        auto cfg = pipeline_config_from_json(cfg_json);
        cfg.seed = seed;
        const std::string estimator = cfg_json.value("estimator", std::string("warpu"));
        EstimateReport rep;
        if (estimator == "warpu") rep = estimate_lambda_warpu(t->target, draws->set, cfg);
        else if (estimator == "mix") rep = estimate_lambda_mix(t->target, draws->set, cfg);
        else fail(ErrorCode::InvalidArgument, "estimate: estimator must be 'warpu' or 'mix', got '" + estimator + "'");
        Json out = to_json(rep);
        out["estimator"] = estimator;
        emit(timings_json, dump(timings_to_json(rep)));
        emit(report_json, dump(out));
    });
}

wb_status wb_estimate_ratio(const wb_target* t1, const wb_samples* draws1, const wb_target* t2,
                            const wb_samples* draws2, const char* procedure, const char* config_json, uint64_t seed,
                            char** report_json, char** timings_json) {
    return guarded([&] {
        need(t1, "target1");
        need(t2, "target2");
        need(draws1, "draws1");
        need(draws2, "draws2");
        need(procedure, "procedure");
        need(report_json, "report_json");
        Json cfg_json = parse_optional(config_json, "estimate config");
        cfg_json.erase("estimator");
        auto cfg = pipeline_config_from_json(cfg_json);
        cfg.seed = seed;
        const std::string proc = procedure;
        RatioProcedure p;
        if (proc == "U_diff") p = RatioProcedure::UDiff;
        else if (proc == "mix_diff") p = RatioProcedure::MixDiff;
        else if (proc == "U_direct") p = RatioProcedure::UDirect;
        else fail(ErrorCode::InvalidArgument, "estimate-ratio: unknown procedure '" + proc + "'");
        const auto rep = estimate_ratio(t1->target, draws1->set, t2->target, draws2->set, cfg, p);
        Json out = to_json(rep);
        out["procedure"] = proc;
        emit(timings_json, dump(timings_to_json(rep)));
        emit(report_json, dump(out));
    });
}

wb_status wb_sample_chain(const wb_target* t, const wb_mixture* m, const double* w0, size_t dim,
                          const char* options_json, uint64_t seed, wb_samples** chain_out, char** diagnostics_json) {
    return guarded([&] {
        need(t, "target");
        need(m, "mixture");
        need(w0, "w0");
        need(chain_out, "chain_out");
        const auto opts = chain_options_from_json(parse_optional(options_json, "chain options"));
        auto res = run_chain(std::span<const double>(w0, dim), opts, m->mix, t->target, seed);
        emit(diagnostics_json, dump(to_json(res.diagnostics)));
        *chain_out = new wb_samples{std::move(res.samples)};
    });
}

wb_status wb_replicate(const char* experiment_json, uint64_t seed, size_t threads, char** report_json,
                       char** table_csv, char** timings_json) {
    return guarded([&] {
        need(experiment_json, "experiment_json");
        need(report_json, "report_json");
        auto cfg = experiment_from_json(parse_json(experiment_json, "experiment"));
        cfg.seed = seed;
        cfg.threads = threads;
        const auto rep = run_replications(cfg);
        emit(table_csv, replication_table_csv(rep));
        emit(timings_json, dump(timings_to_json(rep)));
        emit(report_json, dump(to_json(rep)));
    });
}

wb_status wb_divergence(const char* spec_json, uint64_t seed, char** result_json) {
    return guarded([&] {
        need(spec_json, "spec_json");
        need(result_json, "result_json");
        const Json j = parse_json(spec_json, "divergence");
        for (const auto& [key, _] : j.items())
            require(key == "p1" || key == "p2" || key == "method" || key == "nodes" || key == "n" || key == "s1",
                    "divergence: unknown key '" + key + "'");
        require(j.contains("p1") && j.contains("p2"), "divergence: need p1 and p2");
        const Density p1 = density_from_json(j.at("p1"));
        const Density p2 = density_from_json(j.at("p2"));
        const double s1 = j.value("s1", 0.5);
        const std::string method = j.value("method", std::string(p1.dim <= 2 ? "quadrature" : "monte_carlo"));
        Json out = {{"method", method}, {"s1", s1}};
        if (method == "quadrature") {
            QuadratureOptions q;
            q.nodes = j.value("nodes", q.nodes);
            const auto tab = divergence_table(p1, p2, s1, q);
            out["hellinger"] = tab.hellinger;
            out["harmonic"] = tab.harmonic;
            out["l1"] = tab.l1;
            out["overlap"] = tab.overlap;
        } else if (method == "monte_carlo") {
            MonteCarloOptions mc;
            mc.n = j.value("n", mc.n);
            mc.seed = seed;
            const std::pair<const char*, DivergenceKind> kinds[] = {{"hellinger", DivergenceKind::Hellinger},
                                                                    {"harmonic", DivergenceKind::Harmonic},
                                                                    {"l1", DivergenceKind::L1},
                                                                    {"overlap", DivergenceKind::Overlap}};
            for (const auto& [name, kind] : kinds) {
                const auto v = divergence(p1, p2, DivergenceSpec{kind, s1}, mc);
                out[name] = v.value;
                out[std::string(name) + "_se"] = v.std_error;
            }
        } else {
            fail(ErrorCode::InvalidArgument, "divergence: method must be 'quadrature' or 'monte_carlo'");
        }
        emit(result_json, dump(out));
    });
}

} // extern "C"
