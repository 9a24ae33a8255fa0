#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "warpbridge/em.hpp"
#include "warpbridge/pipeline.hpp"
#include "warpbridge/targets.hpp"

namespace warpbridge {

enum class EstimatorId { WarpU, Mix, RatioUDiff, RatioMixDiff, RatioUDirect, Vanilla, Warp1, Warp2, Warp3 };

/// Accepts warpu, mix, ratio:U_diff, ratio:mix_diff, ratio:U_direct, vanilla, warp1, warp2, warp3.
EstimatorId parse_estimator(const std::string& id);
std::string to_string(EstimatorId id);
bool is_ratio(EstimatorId id);

/// One point of the tuning grid. Unset L/K means L = min(50K, n/2).
struct GridCell {
    std::size_t components = 1;
    std::optional<double> fit_per_component; ///< L/K
    double reference_ratio = 1.0;            ///< m/n
    std::size_t subsets = 5;                 ///< S
};

struct ExperimentConfig {
    BuiltinSpec target;
    std::optional<BuiltinSpec> target2; ///< required by the ratio estimators
    EstimatorId estimator = EstimatorId::WarpU;
    std::vector<GridCell> grid;
    std::size_t n = 1000;
    std::size_t reps = 100;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    bool keep_raw = true;
    EMConfig em; ///< restarts, iteration cap and tolerance; K and seed are set per run

    void validate() const;
};

struct CellReport {
    GridCell cell;
    double truth = 0.0;
    std::size_t completed = 0;
    std::size_t failures = 0;
    std::vector<std::string> failure_messages; ///< at most the first five, in replication order
    EstimatorStats stats;
    double mean_variance_hat = 0.0;
    // Wall-clock figures. These differ between runs; everything above does not.
    double median_t_em = 0.0;
    double median_t_total = 0.0;
    double pps = 0.0; ///< 1 / (sd^2 * median_t_total)
    // Raw per-replication values (successful replications only, in order).
    std::vector<double> estimates;
    std::vector<double> variance_hats;
    std::vector<std::array<double, 2>> half_estimates;
};

struct ReplicationReport {
    std::vector<CellReport> cells;
};

/// Replication r of every cell draws fresh target data from
/// derive_seed(seed, replication, r), so cells are compared on identical data
/// and results do not depend on `threads`. Failed replications are excluded
/// and counted; more than 1% failures in any cell throws.
ReplicationReport run_replications(const ExperimentConfig& cfg);

/// Runs one estimator on given draws; `seed` drives all of its randomness.
EstimateReport run_estimator(EstimatorId id, const TargetDensity& target, const SampleSet& draws,
                             const TargetDensity* target2, const SampleSet* draws2, const GridCell& cell,
                             const EMConfig& em, std::uint64_t seed);

struct LadderReport {
    double truth = 0.0;
    std::vector<std::string> names; ///< vanilla, warp1, warp2, warp3, warpu
    std::vector<EstimatorStats> stats;
    std::vector<std::vector<double>> estimates;
};

/// Vanilla, Warp-I, II, III and Warp-U estimators on identical data streams
/// (n target draws, m reference draws per replication). Needs a 1-D target.
LadderReport warp_ladder_study(const BuiltinSpec& target, std::size_t n, std::size_t m, std::size_t reps,
                               std::uint64_t seed, std::size_t components = 3, std::size_t threads = 1);

} // namespace warpbridge
