#pragma once

// JSON forms of the library's configuration and result types. Parsers reject
// unknown keys so that typos in config files fail loudly.

#include <string>

#include "json.hpp"
#include "warpbridge/divergence.hpp"
#include "warpbridge/em.hpp"
#include "warpbridge/gaussian_mixture.hpp"
#include "warpbridge/mcmc.hpp"
#include "warpbridge/pipeline.hpp"
#include "warpbridge/replication.hpp"
#include "warpbridge/targets.hpp"

namespace warpbridge {

using Json = nlohmann::json;

Json parse_json(const std::string& text, const std::string& what);

/// {"dim", "K", "weights": [K], "means": [[D] x K], "scales": [[D] x K]}.
/// Doubles are written in shortest round-trip form, so a write/read cycle is exact.
Json to_json(const GaussianMixture& mix);
GaussianMixture mixture_from_json(const Json& j);

/// Either {"preset": name} with optional "log_c" override, or
/// {"type": "gaussian_mixture", "mixture": {...}, "log_c"},
/// {"type": "banana", "curvature", "scale", "log_c"},
/// {"type": "skew_mixture", "dim", "weights", "locations", "scales", "shapes", "log_c"}.
BuiltinSpec target_spec_from_json(const Json& j);
Json to_json(const BuiltinSpec& spec);

/// Keys: K, restarts, max_iters, tol. Missing keys keep `base`.
EMConfig em_config_from_json(const Json& j, EMConfig base = {});
Json to_json(const EMResult& fit);

/// Keys: K, K2, L, m, S, em, bridge_tol, bridge_max_iters. The seed is set by the caller.
PipelineConfig pipeline_config_from_json(const Json& j);

/// Deterministic part of a report (no wall-clock values).
Json to_json(const EstimateReport& report);
/// Wall-clock part: t_em, t_bridge, t_total, pps.
Json timings_to_json(const EstimateReport& report);

/// Keys: target, target2, estimator, grid: [{K, L_over_K, m_over_n, S}], n, reps, em, keep_raw.
/// Seed and thread count come from the caller.
ExperimentConfig experiment_from_json(const Json& j);
Json to_json(const ReplicationReport& report);
Json timings_to_json(const ReplicationReport& report);
/// One row per grid cell; deterministic columns only.
std::string replication_table_csv(const ReplicationReport& report);

/// Keys: steps, thin, max_lag, max_stored.
ChainOptions chain_options_from_json(const Json& j);
Json to_json(const ChainDiagnostics& diag);

/// {"standard_normal": dim} | {"mixture": {...}} | {"target": spec} |
/// {"warpu": {"target": spec, "mixture": {...}}}; targets are normalized by their constant.
Density density_from_json(const Json& j);

} // namespace warpbridge
