#include "pbf/bernoulli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pbf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_unit(double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ModelError(std::string(what) + ": must lie in [0,1], got " + std::to_string(v));
    }
}

void check_in_space(double z, const ClutterModel& clutter) {
    if (!clutter.contains(z)) {
        throw std::invalid_argument("measurement " + std::to_string(z) + " outside measurement space [" +
                                    std::to_string(clutter.z_lo()) + ", " + std::to_string(clutter.z_hi()) + "]");
    }
}

// nu(m) / nu(m-1) for a scan of size m >= 1; rejects 0/0.
double cardinality_step(const ClutterModel& clutter, std::size_t m) {
    const double r = clutter.cardinality().successor_ratio(m);
    if (std::isnan(r)) {
        throw ModelError("scan of " + std::to_string(m) +
                         " measurements has zero possibility under the clutter model with or without the target");
    }
    return r;
}

}  // namespace

void ExistenceTpm::validate() const {
    check_unit(t00, "t00");
    check_unit(t01, "t01");
    check_unit(t10, "t10");
    check_unit(t11, "t11");
    if (std::max(t00, t01) != 1.0) throw ModelError("t00: row 0 maximum max(t00, t01) must equal 1");
    if (std::max(t10, t11) != 1.0) throw ModelError("t11: row 1 maximum max(t10, t11) must equal 1");
}

DetectionPossibility DetectionPossibility::from_interval(double pd_lo, double pd_hi) {
    if (!(pd_lo >= 0.0 && pd_lo <= pd_hi && pd_hi <= 1.0)) {
        throw ModelError("detection probability interval must satisfy 0 <= lo <= hi <= 1");
    }
    DetectionPossibility d{1.0 - pd_lo, pd_hi};
    d.validate();
    return d;
}

void DetectionPossibility::validate() const {
    check_unit(d0, "d0");
    check_unit(d1, "d1");
    if (std::max(d0, d1) != 1.0) throw ModelError("d0: max(d0, d1) must equal 1");
}

ClutterModel::ClutterModel(DiscretePossibility cardinality, ScalarFn spatial, double z_lo, double z_hi)
    : cardinality_(std::move(cardinality)), spatial_(std::move(spatial)), z_lo_(z_lo), z_hi_(z_hi) {
    if (!(z_hi_ > z_lo_)) throw ModelError("clutter: empty measurement space");
    if (!spatial_) throw ModelError("clutter: missing spatial possibility");
}

ClutterModel ClutterModel::uniform_poisson(double lambda, double z_lo, double z_hi) {
    if (!(lambda >= 0.0)) throw ModelError("clutter: lambda must be >= 0");
    auto card = lambda == 0.0 ? DiscretePossibility::from_values({1.0}) : poisson_possibility(lambda);
    return ClutterModel(std::move(card), [](double) { return 1.0; }, z_lo, z_hi);
}

double ClutterModel::spatial(double z) const {
    if (!contains(z)) return 0.0;
    return spatial_(z);
}

double ScalarMeasurementModel::operator()(double z, const Eigen::Ref<const Vector>& x) const {
    const double r = (z - h(x)) / sigma;
    return std::exp(-0.5 * r * r);
}

void BernoulliState::check_normalized(double tol) const {
    if (std::abs(std::max(q0, q1) - 1.0) > tol) {
        throw std::logic_error("Bernoulli state: max(q0, q1) = " + std::to_string(std::max(q0, q1)));
    }
    if (spatial_valid && std::abs(spatial.max_weight() - 1.0) > tol) {
        throw std::logic_error("Bernoulli state: max particle weight = " + std::to_string(spatial.max_weight()));
    }
}

std::pair<double, double> predict_existence(double q0, double q1, const ExistenceTpm& tpm) {
    return {std::max(tpm.t00 * q0, tpm.t10 * q1), std::max(tpm.t01 * q0, tpm.t11 * q1)};
}

std::vector<double> predict_spatial_weights(const Matrix& support, std::span<const long> ancestors,
                                            const BernoulliState& prev, const ExistenceTpm& tpm,
                                            const BirthModel& birth, const GaussianTransition& rho, SupMode mode) {
    const auto [q0_pred, q1_pred] = predict_existence(prev.q0, prev.q1, tpm);
    if (!(q1_pred > 0.0)) {
        throw std::domain_error("predict_spatial: predicted presence possibility is zero");
    }
    const auto n = static_cast<std::size_t>(support.cols());
    if (ancestors.size() != n) throw std::invalid_argument("predict_spatial_weights: ancestor count mismatch");

    const double birth_coef = tpm.t01 * prev.q0;
    const double surv_coef = prev.spatial_valid ? tpm.t11 * prev.q1 : 0.0;

    std::vector<double> surv(n, 0.0);
    if (surv_coef > 0.0) {
        if (mode == SupMode::exact) {
            surv = sup_propagate_onto(support, prev.spatial, rho);
        } else {
            for (std::size_t j = 0; j < n; ++j) {
                if (ancestors[j] >= 0) surv[j] = prev.spatial.weights[static_cast<std::size_t>(ancestors[j])];
            }
        }
    }

    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double b = birth_coef > 0.0 ? birth_coef * birth.birth(support.col(static_cast<Eigen::Index>(j))) : 0.0;
        out[j] = std::max(b, surv_coef * surv[j]) / q1_pred;
    }
    return out;
}

ParticleSet predict_spatial(const BernoulliState& prev, const ExistenceTpm& tpm, const BirthModel& birth,
                            const GaussianTransition& rho, const SmcControls& smc, RngStream& rng) {
    if (smc.particles == 0) throw std::invalid_argument("predict_spatial: particle budget is zero");
    const double birth_coef = tpm.t01 * prev.q0;
    const double surv_coef = prev.spatial_valid ? tpm.t11 * prev.q1 : 0.0;
    const std::size_t n = smc.particles;
    const std::size_t prev_n = prev.spatial.size();

    std::size_t n_birth = 0;
    if (surv_coef == 0.0 || prev_n == 0) {
        n_birth = n;
    } else if (birth_coef > 0.0) {
        n_birth = std::min(n, static_cast<std::size_t>(std::llround(smc.birth_fraction * static_cast<double>(n))));
    }
    const std::size_t n_surv = n - n_birth;

    // Survivor parents: all of them in order when the budget matches,
    // otherwise a uniform subset (or wrap-around when growing).
    std::vector<long> ancestors(n, -1);
    if (n_surv == prev_n) {
        std::iota(ancestors.begin(), ancestors.begin() + static_cast<long>(n_surv), 0L);
    } else if (n_surv < prev_n) {
        std::vector<long> idx(prev_n);
        std::iota(idx.begin(), idx.end(), 0L);
        for (std::size_t j = 0; j < n_surv; ++j) {
            std::uniform_int_distribution<std::size_t> pick(j, prev_n - 1);
            std::swap(idx[j], idx[pick(rng.engine())]);
        }
        std::sort(idx.begin(), idx.begin() + static_cast<long>(n_surv));
        std::copy_n(idx.begin(), n_surv, ancestors.begin());
    } else {
        for (std::size_t j = 0; j < n_surv; ++j) ancestors[j] = static_cast<long>(j % prev_n);
    }

    const Eigen::Index dim = rho.F().rows();
    Matrix states(dim, static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n_surv; ++j) {
        Vector noise(dim);
        for (Eigen::Index k = 0; k < dim; ++k) noise[k] = rng.normal();
        states.col(static_cast<Eigen::Index>(j)) =
            rho.F() * prev.spatial.state(static_cast<std::size_t>(ancestors[j])) + rho.noise().cholesky() * noise;
    }
    for (std::size_t j = n_surv; j < n; ++j) {
        states.col(static_cast<Eigen::Index>(j)) = sample_induced(birth.birth, rng);
    }

    std::vector<double> weights = predict_spatial_weights(states, ancestors, prev, tpm, birth, rho, smc.sup_mode);

    std::vector<double> importance(n, 1.0);
    double surv_mean = 0.0;
    for (std::size_t j = 0; j < n_surv; ++j) {
        importance[j] = prev.spatial.importance[static_cast<std::size_t>(ancestors[j])];
        surv_mean += importance[j];
    }
    // Births enter at the survivors' mean importance so a resample neither
    // favours nor starves them before the likelihood has spoken.
    if (n_surv > 0) {
        surv_mean /= static_cast<double>(n_surv);
        std::fill(importance.begin() + static_cast<long>(n_surv), importance.end(), surv_mean);
    }

    ParticleSet out(std::move(states), std::move(weights), std::move(importance));
    normalize(out);
    return out;
}

BernoulliState predict(const BernoulliState& prev, const ExistenceTpm& tpm, const BirthModel& birth,
                       const GaussianTransition& rho, const SmcControls& smc, RngStream& rng) {
    const auto [q0_pred, q1_pred] = predict_existence(prev.q0, prev.q1, tpm);
    if (!(q1_pred > 0.0)) {
        return {q0_pred, q1_pred, prev.spatial, false};
    }
    return {q0_pred, q1_pred, predict_spatial(prev, tpm, birth, rho, smc, rng), true};
}

double clutter_possibility(std::span<const double> Z, const ClutterModel& clutter) {
    double v = clutter.cardinality()(Z.size());
    for (double z : Z) {
        check_in_space(z, clutter);
        v *= clutter.spatial(z);
    }
    return v;
}

double clutter_ratio(std::span<const double> Z, double z, const ClutterModel& clutter) {
    if (std::find(Z.begin(), Z.end(), z) == Z.end()) {
        throw std::invalid_argument("clutter_ratio: z is not an element of Z");
    }
    for (double zz : Z) check_in_space(zz, clutter);
    const double step = cardinality_step(clutter, Z.size());
    const double mu = clutter.spatial(z);
    if (!(step > 0.0) || !(mu > 0.0)) {
        throw std::domain_error("clutter_ratio: kappa(Z) = 0, scan impossible under the clutter model");
    }
    return 1.0 / (step * mu);
}

double likelihood_factor(std::span<const double> Z, const Eigen::Ref<const Vector>& x, const SensorModel& sensor) {
    double best = 0.0;
    for (double z : Z) {
        best = std::max(best, clutter_ratio(Z, z, sensor.clutter) * sensor.measurement(z, x));
    }
    if (Z.empty()) return sensor.detection.d0;
    return std::max(sensor.detection.d0, sensor.detection.d1 * best);
}

double sensor_ratio(std::span<const double> Z, const ParticleSet& predicted, const SensorModel& sensor) {
    if (predicted.size() == 0) throw std::invalid_argument("sensor_ratio: empty particle set");
    if (Z.empty()) return sensor.detection.d0;
    double best = 0.0;
    for (double z : Z) {
        double sup = 0.0;
        for (std::size_t j = 0; j < predicted.size(); ++j) {
            sup = std::max(sup, sensor.measurement(z, predicted.state(j)) * predicted.weights[j]);
        }
        best = std::max(best, clutter_ratio(Z, z, sensor.clutter) * sup);
    }
    return std::max(sensor.detection.d0, sensor.detection.d1 * best);
}

AlphaMode parse_alpha_mode(std::string_view s) {
    if (s == "product") return AlphaMode::product;
    if (s == "joint") return AlphaMode::joint;
    throw std::invalid_argument("unknown alpha mode '" + std::string(s) + "' (expected product|joint)");
}

std::string_view to_string(AlphaMode m) { return m == AlphaMode::joint ? "joint" : "product"; }

namespace {

void check_scan_count(const ScanSet& scans, std::span<const SensorModel> sensors, const char* who) {
    if (sensors.empty()) throw std::invalid_argument(std::string(who) + ": need at least one sensor");
    if (scans.size() != sensors.size()) {
        throw std::invalid_argument(std::string(who) + ": " + std::to_string(scans.size()) + " scans for " +
                                    std::to_string(sensors.size()) + " sensors");
    }
}

// Each sensor's R_i and L_i are scaled by nu(m)/nu(m-1) (1 for an empty
// scan). The common factor is returned in log_scale; only the absence
// hypothesis sees it.
std::vector<kernels::SensorScan> digest_scans(const ScanSet& scans, std::span<const SensorModel> sensors,
                                              std::vector<double>& log_a, double& log_scale) {
    std::vector<kernels::SensorScan> digested(sensors.size());
    log_a.assign(sensors.size(), 0.0);
    log_scale = 0.0;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        const SensorModel& s = sensors[i];
        const Scan& Z = scans[i];
        kernels::SensorScan& d = digested[i];
        d.h = s.measurement.h;
        d.sigma = s.measurement.sigma;
        d.log_d1 = std::log(s.detection.d1);
        d.z = Z;
        if (!Z.empty()) {
            log_a[i] = std::log(cardinality_step(s.clutter, Z.size()));
            d.log_b.reserve(Z.size());
            for (double z : Z) {
                check_in_space(z, s.clutter);
                const double mu = s.clutter.spatial(z);
                if (!(mu > 0.0)) throw ModelError("clutter spatial possibility is zero at a measurement");
                d.log_b.push_back(-std::log(mu));
            }
        }
        d.log_miss = std::log(s.detection.d0) + log_a[i];
        log_scale += log_a[i];
    }
    return digested;
}

}  // namespace

BernoulliState update(const BernoulliState& pred, const ScanSet& scans, std::span<const SensorModel> sensors,
                      UpdateDiagnostics* diag, AlphaMode alpha_mode) {
    check_scan_count(scans, sensors, "update");

    std::vector<double> log_a;
    double log_scale = 0.0;
    const std::vector<kernels::SensorScan> digested = digest_scans(scans, sensors, log_a, log_scale);

    const bool has_target = pred.spatial_valid && pred.q1 > 0.0;
    std::vector<double> log_w(pred.spatial.size());
    std::transform(pred.spatial.weights.begin(), pred.spatial.weights.end(), log_w.begin(),
                   [](double w) { return std::log(w); });

    kernels::ScanTerms terms;
    double log_alpha_hat = 0.0;
    std::vector<double> log_r(sensors.size(), 0.0);
    if (has_target) {
        terms = kernels::scan_terms(pred.spatial.states, log_w, digested);
        for (std::size_t i = 0; i < digested.size(); ++i) {
            double hit = kNegInf;
            for (std::size_t m = 0; m < digested[i].z.size(); ++m) {
                hit = std::max(hit, digested[i].log_b[m] + terms.log_sup[i][m]);
            }
            log_r[i] = std::max(digested[i].log_miss, digested[i].log_d1 + hit);
            log_alpha_hat += log_r[i];
        }
    }

    if (has_target && alpha_mode == AlphaMode::joint) {
        log_alpha_hat = kNegInf;
        for (std::size_t j = 0; j < log_w.size(); ++j) {
            log_alpha_hat = std::max(log_alpha_hat, log_w[j] + terms.log_factor[j]);
        }
    }

    const double l0 = std::log(pred.q0) + log_scale;
    const double l1 = has_target ? std::log(pred.q1) + log_alpha_hat : kNegInf;
    const double top = std::max(l0, l1);
    if (top == kNegInf) {
        throw std::domain_error("update: degenerate normalizer (alpha = 0 and q0_pred = 0)");
    }

    BernoulliState post;
    post.q0 = std::exp(l0 - top);
    post.q1 = std::exp(l1 - top);
    post.spatial = pred.spatial;
    post.spatial_valid = has_target && post.q1 > 0.0;

    if (diag) {
        diag->log_alpha = has_target ? log_alpha_hat - log_scale : kNegInf;
        diag->log_ratio.resize(sensors.size());
        for (std::size_t i = 0; i < sensors.size(); ++i) diag->log_ratio[i] = log_r[i] - log_a[i];
    }

    if (post.spatial_valid) {
        const std::size_t n = pred.spatial.size();
        std::vector<double> lw(n), li(n);
        double lw_top = kNegInf, li_top = kNegInf;
        for (std::size_t j = 0; j < n; ++j) {
            lw[j] = log_w[j] + terms.log_factor[j] - log_alpha_hat;
            li[j] = std::log(pred.spatial.importance[j]) + terms.log_factor[j];
            lw_top = std::max(lw_top, lw[j]);
            li_top = std::max(li_top, li[j]);
        }
        if (lw_top == kNegInf || li_top == kNegInf) {
            throw std::domain_error("update: likelihood vanishes on every particle");
        }
        for (std::size_t j = 0; j < n; ++j) {
            post.spatial.weights[j] = std::exp(lw[j] - lw_top);
            post.spatial.importance[j] = std::exp(li[j] - li_top);
        }
    }
    return post;
}

std::vector<double> log_likelihood(const Matrix& states, const ScanSet& scans, std::span<const SensorModel> sensors) {
    check_scan_count(scans, sensors, "log_likelihood");
    std::vector<double> log_a;
    double log_scale = 0.0;
    const std::vector<kernels::SensorScan> digested = digest_scans(scans, sensors, log_a, log_scale);
    const std::vector<double> zeros(static_cast<std::size_t>(states.cols()), 0.0);
    return kernels::scan_terms(states, zeros, digested).log_factor;
}

namespace {

constexpr std::size_t kMaxStages = 64;

std::vector<double> max_normalized_exp(std::vector<double> l) {
    const double top = *std::max_element(l.begin(), l.end());
    if (top == kNegInf) throw std::domain_error("progressive_correction: likelihood vanishes on every particle");
    for (double& v : l) v = std::exp(v - top);
    return l;
}

// exp(log r + lam * ll), max-normalized.
std::vector<double> tempered(std::span<const double> log_r, std::span<const double> ll, double lam) {
    std::vector<double> l(log_r.size());
    for (std::size_t j = 0; j < l.size(); ++j) l[j] = log_r[j] + lam * ll[j];
    return max_normalized_exp(std::move(l));
}

}  // namespace

ParticleSet progressive_correction(const ParticleSet& pred, const ScanSet& scans, std::span<const SensorModel> sensors,
                                   const SmcControls& smc, RngStream& rng, std::size_t* stages) {
    const std::size_t n = pred.size();
    if (n == 0) throw std::invalid_argument("progressive_correction: empty particle set");
    const double target = smc.resample_threshold * static_cast<double>(n);

    Matrix x = pred.states;
    std::vector<double> log_w(n), log_r(n);
    for (std::size_t j = 0; j < n; ++j) {
        log_w[j] = std::log(pred.weights[j]);
        log_r[j] = std::log(pred.importance[j]);
    }
    std::vector<double> ll = log_likelihood(x, scans, sensors);
    double done = 0.0;
    std::size_t count = 0;
    while (true) {
        ++count;
        const double rest = 1.0 - done;
        double lam = rest;
        if (count < kMaxStages && effective_size(tempered(log_r, ll, rest)) < target) {
            double lo = 0.0, hi = rest;
            for (int it = 0; it < 50; ++it) {
                const double mid = 0.5 * (lo + hi);
                (effective_size(tempered(log_r, ll, mid)) >= target ? lo : hi) = mid;
            }
            lam = lo > 0.0 ? lo : hi;
        }
        for (std::size_t j = 0; j < n; ++j) log_r[j] += lam * ll[j];
        done = lam == rest ? 1.0 : done + lam;
        if (done >= 1.0) break;

        const std::vector<double> r = max_normalized_exp(log_r);
        const std::vector<std::size_t> idx = resample_indices(r, n, rng);
        ParticleSet moved;
        moved.states.resize(x.rows(), x.cols());
        moved.weights.resize(n);
        moved.importance.assign(n, 1.0);
        std::vector<double> next_log_w(n);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t src = idx[j];
            moved.states.col(static_cast<Eigen::Index>(j)) = x.col(static_cast<Eigen::Index>(src));
            moved.weights[j] = log_w[src] + done * ll[src];
            next_log_w[j] = log_w[src];
        }
        moved.weights = max_normalized_exp(std::move(moved.weights));
        regularize(moved, smc.regularization, rng);
        x = std::move(moved.states);
        log_w = std::move(next_log_w);
        std::fill(log_r.begin(), log_r.end(), 0.0);
        ll = log_likelihood(x, scans, sensors);
    }

    std::vector<double> lw(n);
    for (std::size_t j = 0; j < n; ++j) lw[j] = log_w[j] + ll[j];
    if (stages) *stages = count;
    return ParticleSet(std::move(x), max_normalized_exp(std::move(lw)), max_normalized_exp(std::move(log_r)));
}

}  // namespace pbf
