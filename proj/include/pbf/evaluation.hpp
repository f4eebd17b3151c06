#pragma once

#include "pbf/bernoulli.hpp"
#include "pbf/config.hpp"
#include "pbf/doppler.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace pbf::eval {

/// OSPA distance between two finite sets of points (any dimension). Sets
/// are small here, so the optimal assignment is found by enumeration.
[[nodiscard]] double ospa(const std::vector<Vector>& est, const std::vector<Vector>& truth, const OspaParams& params);

[[nodiscard]] double ospa_position(const std::optional<doppler::Point2>& est, const doppler::Point2& truth,
                                   const OspaParams& params);

[[nodiscard]] bool confirm_track(double q0, double q1, double threshold = 0.5);

/// Everything the filter needs for one scenario, built once per config.
struct FilterModel {
    ExistenceTpm tpm;
    BirthModel birth;
    GaussianTransition rho;
    std::vector<SensorModel> sensors;
    SmcControls smc;
    AlphaMode alpha_mode = AlphaMode::product;

    static FilterModel from_config(const ScenarioConfig& cfg);
};

/// Normalization readings taken inside one filter step.
struct StepChecks {
    double exist_max_pred = 0.0;   // max(q0, q1) after prediction
    double weight_max_pred = 0.0;  // max particle weight after prediction
    double exist_max_post = 0.0;
    double weight_max_post = 0.0;
    bool resampled = false;
    std::size_t correction_stages = 0;  // 0: plain update
};

[[nodiscard]] BernoulliState initial_state(const FilterModel& model, double q0, double q1, RngStream& rng);

/// Resample (if N_eff of the importance drops below threshold * N), then
/// predict and update. When the update leaves N_eff below the same
/// threshold and smc.progressive is set, the spatial part is redone by
/// progressive correction from the predicted set.
[[nodiscard]] BernoulliState filter_step(const BernoulliState& post, const ScanSet& scans, const FilterModel& model,
                                         RngStream& rng, StepChecks* checks = nullptr);

struct StepRecord {
    std::size_t k = 0;  // 1-based time index
    doppler::TargetState truth;
    ScanSet scans;  // empty at k = 1
    double q0 = 0.0;
    double q1 = 0.0;
    bool confirmed = false;
    std::optional<doppler::TargetState> estimate;
    double ospa = 0.0;
    StepChecks checks;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;

    /// 1-based step at which the first run of `n` consecutive confirmed
    /// steps starts, if any.
    [[nodiscard]] std::optional<std::size_t> establishment_step(std::size_t n) const;
};

/// One filter run. The configured initial state is the posterior at k = 1;
/// steps k = 2..K predict, ingest the scan of truth x_k and update.
[[nodiscard]] TrialRecord run_trial(const ScenarioConfig& cfg, std::uint64_t seed);

struct McReport {
    std::vector<double> mean_ospa;           // per step
    std::vector<double> confirmed_fraction;  // per step
    double establishment_rate = 0.0;
    std::optional<double> mean_establishment_step;
    std::vector<std::uint64_t> seeds;
    std::vector<std::optional<std::size_t>> establishment_steps;  // per run
    std::vector<TrialRecord> trials;  // kept only when requested
};

/// Runs seeds base_seed + i, i = 0..n_runs-1, in parallel over runs
/// (threads <= 0 keeps the OpenMP default). The report does not depend on
/// the thread count.
[[nodiscard]] McReport run_monte_carlo(const ScenarioConfig& cfg, std::size_t n_runs, std::uint64_t base_seed,
                                       int threads = 0, bool keep_trials = false);

}  // namespace pbf::eval
