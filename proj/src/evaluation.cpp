#include "pbf/evaluation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

namespace pbf::eval {

double ospa(const std::vector<Vector>& est, const std::vector<Vector>& truth, const OspaParams& params) {
    const std::vector<Vector>& small = est.size() <= truth.size() ? est : truth;
    const std::vector<Vector>& large = est.size() <= truth.size() ? truth : est;
    const std::size_t m = small.size();
    const std::size_t n = large.size();
    if (n == 0) return 0.0;
    if (n > 8) throw std::invalid_argument("ospa: sets larger than 8 are not supported");

    const double c = params.c;
    const double p = params.p;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double d = std::min(c, (small[i] - large[perm[i]]).norm());
            acc += std::pow(d, p);
        }
        best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double total = best + std::pow(c, p) * static_cast<double>(n - m);
    return std::pow(total / static_cast<double>(n), 1.0 / p);
}

double ospa_position(const std::optional<doppler::Point2>& est, const doppler::Point2& truth,
                     const OspaParams& params) {
    std::vector<Vector> e;
    if (est) e.emplace_back(*est);
    return ospa(e, {Vector(truth)}, params);
}

bool confirm_track(double q0, double q1, double threshold) { return q1 - q0 >= threshold; }

FilterModel FilterModel::from_config(const ScenarioConfig& cfg) {
    const auto cv = doppler::cv_matrices(cfg.scenario.radar.sample_interval_s, cfg.scenario.radar.process_noise);
    return FilterModel{cfg.tpm, BirthModel{GaussianPossibility(cfg.birth_mean, cfg.birth_cov)},
                       GaussianTransition(cv.F, cv.Q), doppler::sensor_models(cfg.scenario), cfg.smc,
                       cfg.alpha_mode};
}

BernoulliState initial_state(const FilterModel& model, double q0, double q1, RngStream& rng) {
    return {q0, q1, sample_from_possibility(model.birth.birth, model.smc.particles, rng), true};
}

BernoulliState filter_step(const BernoulliState& post, const ScanSet& scans, const FilterModel& model, RngStream& rng,
                           StepChecks* checks) {
    const BernoulliState* prev = &post;
    BernoulliState resampled;
    const double n = static_cast<double>(post.spatial.size());
    const bool do_resample =
        post.spatial_valid && effective_size(post.spatial.importance) < model.smc.resample_threshold * n;
    if (do_resample) {
        resampled = post;
        resampled.spatial = resample(post.spatial, rng);
        regularize(resampled.spatial, model.smc.regularization, rng);
        prev = &resampled;
    }

    const BernoulliState pred = predict(*prev, model.tpm, model.birth, model.rho, model.smc, rng);
    BernoulliState next = update(pred, scans, model.sensors, nullptr, model.alpha_mode);
    std::size_t stages = 0;
    if (model.smc.progressive && next.spatial_valid &&
        effective_size(next.spatial.importance) < model.smc.resample_threshold * n) {
        next.spatial = progressive_correction(pred.spatial, scans, model.sensors, model.smc, rng, &stages);
    }
    if (checks) {
        checks->correction_stages = stages;
        checks->resampled = do_resample;
        checks->exist_max_pred = std::max(pred.q0, pred.q1);
        checks->weight_max_pred = pred.spatial_valid ? pred.spatial.max_weight() : 1.0;
        checks->exist_max_post = std::max(next.q0, next.q1);
        checks->weight_max_post = next.spatial_valid ? next.spatial.max_weight() : 1.0;
    }
    return next;
}

std::optional<std::size_t> TrialRecord::establishment_step(std::size_t n) const {
    std::size_t run = 0;
    for (const StepRecord& s : steps) {
        run = s.confirmed ? run + 1 : 0;
        if (run >= n) return s.k + 1 - n;
    }
    return std::nullopt;
}

namespace {

StepRecord record_step(std::size_t k, const doppler::TargetState& truth, ScanSet scans, const BernoulliState& st,
                       const ScenarioConfig& cfg, const StepChecks& checks) {
    StepRecord r;
    r.k = k;
    r.truth = truth;
    r.scans = std::move(scans);
    r.q0 = st.q0;
    r.q1 = st.q1;
    r.confirmed = confirm_track(st.q0, st.q1, cfg.evaluation.confirm_threshold);
    std::optional<doppler::Point2> pos;
    if (r.confirmed && st.spatial_valid) {
        r.estimate = doppler::TargetState(point_estimate(st.spatial));
        pos = doppler::Point2((*r.estimate)[0], (*r.estimate)[2]);
    }
    r.ospa = ospa_position(pos, doppler::Point2(truth[0], truth[2]), cfg.evaluation.ospa);
    r.checks = checks;
    return r;
}

}  // namespace

TrialRecord run_trial(const ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const RngStream base(seed);
    RngStream truth_rng = base.substream("truth");
    RngStream detect_rng = base.substream("detection");
    RngStream clutter_rng = base.substream("clutter");
    RngStream filter_rng = base.substream("filter");

    const FilterModel model = FilterModel::from_config(cfg);
    const auto cv = doppler::cv_matrices(cfg.scenario.radar.sample_interval_s, cfg.scenario.radar.process_noise);
    const auto truth = doppler::simulate_truth(cfg.truth.x1, cfg.truth.steps, cv, truth_rng, cfg.truth.noisy);

    TrialRecord rec;
    rec.seed = seed;
    rec.steps.reserve(truth.size());
    BernoulliState st = initial_state(model, cfg.q0_init, cfg.q1_init, filter_rng);
    StepChecks init_checks{std::max(st.q0, st.q1), st.spatial.max_weight(), std::max(st.q0, st.q1),
                           st.spatial.max_weight(), false};
    rec.steps.push_back(record_step(1, truth[0], {}, st, cfg, init_checks));
    for (std::size_t k = 1; k < truth.size(); ++k) {
        ScanSet scans = doppler::generate_scan(truth[k], cfg.scenario, detect_rng, clutter_rng);
        StepChecks checks;
        st = filter_step(st, scans, model, filter_rng, &checks);
        rec.steps.push_back(record_step(k + 1, truth[k], std::move(scans), st, cfg, checks));
    }
    return rec;
}

McReport run_monte_carlo(const ScenarioConfig& cfg, std::size_t n_runs, std::uint64_t base_seed, int threads,
                         bool keep_trials) {
    if (n_runs < 1) throw std::invalid_argument("run_monte_carlo: n_runs must be >= 1");
    cfg.validate();
    std::vector<TrialRecord> trials(n_runs);
    std::vector<std::exception_ptr> errors(n_runs);

    const long n = static_cast<long>(n_runs);
    const int team = threads > 0 ? threads : omp_get_max_threads();
    // One trial per thread; kernels inside a trial then run serially. A
    // single run keeps the whole team for its kernels instead.
    if (n_runs == 1) {
        const int saved = omp_get_max_threads();
        omp_set_num_threads(team);
        try {
            trials[0] = run_trial(cfg, base_seed);
        } catch (...) {
            errors[0] = std::current_exception();
        }
        omp_set_num_threads(saved);
    } else {
#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
        for (long i = 0; i < n; ++i) {
            try {
                trials[static_cast<std::size_t>(i)] = run_trial(cfg, base_seed + static_cast<std::uint64_t>(i));
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    const std::size_t steps = trials.front().steps.size();
    McReport rep;
    rep.mean_ospa.assign(steps, 0.0);
    rep.confirmed_fraction.assign(steps, 0.0);
    std::size_t established = 0;
    double step_sum = 0.0;
    for (const TrialRecord& t : trials) {
        rep.seeds.push_back(t.seed);
        for (std::size_t k = 0; k < steps; ++k) {
            rep.mean_ospa[k] += t.steps[k].ospa;
            rep.confirmed_fraction[k] += t.steps[k].confirmed ? 1.0 : 0.0;
        }
        const auto est = t.establishment_step(cfg.evaluation.establish_steps);
        rep.establishment_steps.push_back(est);
        if (est) {
            ++established;
            step_sum += static_cast<double>(*est);
        }
    }
    const double runs = static_cast<double>(n_runs);
    for (std::size_t k = 0; k < steps; ++k) {
        rep.mean_ospa[k] /= runs;
        rep.confirmed_fraction[k] /= runs;
    }
    rep.establishment_rate = static_cast<double>(established) / runs;
    if (established > 0) rep.mean_establishment_step = step_sum / static_cast<double>(established);
    if (keep_trials) rep.trials = std::move(trials);
    return rep;
}

}  // namespace pbf::eval
