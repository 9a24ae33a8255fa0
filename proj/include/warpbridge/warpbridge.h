/*
 * warpbridge C API.
 *
 * Every function returns a wb_status. On failure, wb_last_error() returns a
 * message describing the most recent failure on the calling thread; it stays
 * valid until the next failing call on that thread.
 *
 * Objects are opaque handles released with their *_free function (NULL is
 * accepted). Strings returned through char** out-parameters are owned by the
 * caller and released with wb_string_free. Structured inputs and outputs are
 * JSON documents.
 */
#ifndef WARPBRIDGE_H
#define WARPBRIDGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WB_API __declspec(dllexport)
#else
#define WB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum wb_status {
    WB_OK = 0,
    WB_ERR_INVALID_ARGUMENT = 1,
    WB_ERR_DIMENSION_MISMATCH = 2,
    WB_ERR_IO = 3,
    WB_ERR_NUMERIC = 4,
    WB_ERR_CONVERGENCE = 5,
    WB_ERR_PROTOCOL = 6,
    WB_ERR_INTERNAL = 7
} wb_status;

typedef struct wb_samples wb_samples;
typedef struct wb_mixture wb_mixture;
typedef struct wb_target wb_target;

WB_API const char* wb_version(void);
WB_API const char* wb_last_error(void);
WB_API void wb_string_free(char* s);

/* Sample sets: n rows of dim doubles, row-major. */
WB_API wb_status wb_samples_create(size_t dim, size_t n, const double* values, wb_samples** out);
WB_API wb_status wb_samples_read_csv(const char* path, wb_samples** out);
WB_API wb_status wb_samples_write_csv(const wb_samples* s, const char* path);
/* Writes the samples plus one integer column named `column_name`. */
WB_API wb_status wb_samples_write_csv_with_column(const wb_samples* s, const int* column, const char* column_name,
                                                  const char* path);
WB_API size_t wb_samples_size(const wb_samples* s);
WB_API size_t wb_samples_dim(const wb_samples* s);
WB_API const double* wb_samples_data(const wb_samples* s);
WB_API void wb_samples_free(wb_samples* s);

/* Diagonal Gaussian mixtures. */
WB_API wb_status wb_mixture_from_json(const char* json, wb_mixture** out);
WB_API wb_status wb_mixture_to_json(const wb_mixture* m, char** json_out);
WB_API wb_status wb_mixture_log_pdf(const wb_mixture* m, const double* x, size_t dim, double* out);
WB_API size_t wb_mixture_dim(const wb_mixture* m);
WB_API void wb_mixture_free(wb_mixture* m);

/* Unnormalized targets: a built-in spec (JSON) or an external evaluator
 * process speaking the HELLO/EVAL line protocol. timeout_seconds <= 0 means
 * the 60 s default. */
WB_API wb_status wb_target_from_json(const char* spec_json, wb_target** out);
WB_API wb_status wb_target_external(const char* command, size_t dim, double timeout_seconds, wb_target** out);
WB_API size_t wb_target_dim(const wb_target* t);
WB_API wb_status wb_target_sample(const wb_target* t, size_t n, uint64_t seed, wb_samples** out);
WB_API void wb_target_free(wb_target* t);

/* Penalized EM. config_json keys: K, restarts, max_iters, tol (NULL for defaults).
 * fit_json receives loglik, iterations and the mixture; it may be NULL. */
WB_API wb_status wb_fit(const wb_samples* data, const char* config_json, uint64_t seed, size_t threads,
                        wb_mixture** mixture_out, char** fit_json);

/* Warp-U transform. psi_out (n entries, may be NULL) receives 1-based components. */
WB_API wb_status wb_transform(const wb_mixture* m, const wb_samples* data, uint64_t seed, size_t threads,
                              wb_samples** out, int* psi_out);

/* Half-split estimate of log c. config_json keys: estimator ("warpu" or "mix"),
 * K, L, m, S, em, bridge_tol, bridge_max_iters. report_json holds the
 * deterministic results; timings_json (may be NULL) the wall-clock figures. */
WB_API wb_status wb_estimate(const wb_target* t, const wb_samples* draws, const char* config_json, uint64_t seed,
                             char** report_json, char** timings_json);

/* log(c1/c2). procedure: "U_diff", "mix_diff" or "U_direct". config as above plus K2. */
WB_API wb_status wb_estimate_ratio(const wb_target* t1, const wb_samples* draws1, const wb_target* t2,
                                   const wb_samples* draws2, const char* procedure, const char* config_json,
                                   uint64_t seed, char** report_json, char** timings_json);

/* Warp-U MCMC chain from w0. options_json keys: steps, thin, max_lag, max_stored. */
WB_API wb_status wb_sample_chain(const wb_target* t, const wb_mixture* m, const double* w0, size_t dim,
                                 const char* options_json, uint64_t seed, wb_samples** chain_out,
                                 char** diagnostics_json);

/* Replication study. Results are independent of `threads`. table_csv and
 * timings_json may be NULL. */
WB_API wb_status wb_replicate(const char* experiment_json, uint64_t seed, size_t threads, char** report_json,
                              char** table_csv, char** timings_json);

/* Divergences between two densities. spec_json: {"p1": density, "p2": density,
 * "method": "quadrature" | "monte_carlo", "nodes", "n", "s1"}. */
WB_API wb_status wb_divergence(const char* spec_json, uint64_t seed, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* WARPBRIDGE_H */
