#include "pbf/doppler.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pbf::doppler {

void RadarParams::validate() const {
    if (!(carrier_hz > 0.0)) throw ModelError("carrier_hz: must be positive");
    if (!(speed_of_light > 0.0)) throw ModelError("speed_of_light: must be positive");
    if (!(max_doppler_hz > 0.0)) throw ModelError("max_doppler_hz: must be positive");
    if (!(sample_interval_s > 0.0)) throw ModelError("sample_interval_s: must be positive");
    if (!(process_noise > 0.0)) throw ModelError("process_noise: must be positive");
}

void SensorParams::validate() const {
    if (!(sigma_hz > 0.0)) throw ModelError("sigma_hz: must be positive");
    if (!(clutter_rate >= 0.0)) throw ModelError("clutter_rate: must be >= 0");
    if (!(beta_true_m > 0.0)) throw ModelError("beta_true_m: must be positive");
    detection.validate();
}

CvMatrices cv_matrices(double T, double q) {
    Eigen::Matrix2d f;
    f << 1.0, T, 0.0, 1.0;
    Eigen::Matrix2d qb;
    qb << T * T * T / 3.0, T * T / 2.0, T * T / 2.0, T;
    qb *= q;
    CvMatrices out;
    out.F.setZero();
    out.Q.setZero();
    out.F.block<2, 2>(0, 0) = f;
    out.F.block<2, 2>(2, 2) = f;
    out.Q.block<2, 2>(0, 0) = qb;
    out.Q.block<2, 2>(2, 2) = qb;
    return out;
}

double doppler_h(const Eigen::Ref<const Vector>& x, const Point2& transmitter, const Point2& receiver,
                 double carrier_hz, double speed_of_light) {
    const Point2 p(x[0], x[2]);
    const Point2 v(x[1], x[3]);
    const Point2 to_rx = p - receiver;
    const Point2 to_tx = p - transmitter;
    const double r_rx = to_rx.norm();
    const double r_tx = to_tx.norm();
    if (r_rx == 0.0 || r_tx == 0.0) {
        throw std::domain_error("doppler_h: target coincides with transmitter or receiver");
    }
    return -v.dot(to_rx / r_rx + to_tx / r_tx) * carrier_hz / speed_of_light;
}

double doppler_h(const Eigen::Ref<const Vector>& x, std::size_t receiver, const Scenario& s) {
    return doppler_h(x, s.geometry.transmitter, s.geometry.receivers.at(receiver), s.radar.carrier_hz,
                     s.radar.speed_of_light);
}

double doppler_likelihood(double z, const Eigen::Ref<const Vector>& x, std::size_t receiver, const Scenario& s) {
    const double f0 = s.radar.max_doppler_hz;
    if (!(z >= -f0 && z <= f0)) {
        throw std::invalid_argument("doppler_likelihood: z = " + std::to_string(z) + " outside [-f0, f0]");
    }
    const double sigma = s.sensors.at(receiver).sigma_hz;
    const GaussianPossibility g(Vector::Constant(1, doppler_h(x, receiver, s)), Matrix::Constant(1, 1, sigma * sigma));
    return gauss_eval(Vector::Constant(1, z), g);
}

double true_detection_prob(double d, double beta) {
    const double r = d / beta;
    return std::exp(-(r * r) * (r * r));
}

bool sample_detection(double range, double beta, RngStream& rng) {
    return rng.bernoulli(true_detection_prob(range, beta));
}

std::vector<TargetState> simulate_truth(const TargetState& x1, std::size_t steps, const CvMatrices& cv,
                                        RngStream& rng, bool noisy) {
    if (steps == 0) throw std::invalid_argument("simulate_truth: steps must be >= 1");
    const Eigen::Matrix4d L = cv.Q.llt().matrixL();
    std::vector<TargetState> out;
    out.reserve(steps);
    out.push_back(x1);
    for (std::size_t k = 1; k < steps; ++k) {
        TargetState next = cv.F * out.back();
        if (noisy) {
            Eigen::Vector4d n;
            for (int i = 0; i < 4; ++i) n[i] = rng.normal();
            next += L * n;
        }
        out.push_back(next);
    }
    return out;
}

ScanSet generate_scan(const TargetState& x, const Scenario& s, RngStream& detect_rng, RngStream& clutter_rng) {
    const double f0 = s.radar.max_doppler_hz;
    ScanSet scans(s.geometry.receivers.size());
    for (std::size_t i = 0; i < scans.size(); ++i) {
        const SensorParams& sp = s.sensors.at(i);
        const Point2 p(x[0], x[2]);
        if (sample_detection((p - s.geometry.receivers[i]).norm(), sp.beta_true_m, detect_rng)) {
            const double h = doppler_h(x, i, s);
            // Redraw noise until the reading lands inside [-f0, f0]; give up
            // (no detection) if the true shift is far outside the band.
            for (int attempt = 0; attempt < 1000; ++attempt) {
                const double z = h + sp.sigma_hz * detect_rng.normal();
                if (z >= -f0 && z <= f0) {
                    scans[i].push_back(z);
                    break;
                }
            }
        }
        const std::uint64_t n_false = clutter_rng.poisson(sp.clutter_rate);
        for (std::uint64_t c = 0; c < n_false; ++c) scans[i].push_back(clutter_rng.uniform(-f0, f0));
    }
    return scans;
}

std::vector<SensorModel> sensor_models(const Scenario& s) {
    if (s.sensors.size() != s.geometry.receivers.size()) {
        throw ModelError("scenario: " + std::to_string(s.sensors.size()) + " sensor blocks for " +
                         std::to_string(s.geometry.receivers.size()) + " receivers");
    }
    std::vector<SensorModel> out;
    out.reserve(s.sensors.size());
    const double f0 = s.radar.max_doppler_hz;
    for (std::size_t i = 0; i < s.sensors.size(); ++i) {
        const SensorParams& sp = s.sensors[i];
        ScalarMeasurementModel meas{
            [tx = s.geometry.transmitter, rx = s.geometry.receivers[i], fc = s.radar.carrier_hz,
             c = s.radar.speed_of_light](const Eigen::Ref<const Vector>& x) { return doppler_h(x, tx, rx, fc, c); },
            sp.sigma_hz};
        out.push_back(SensorModel{sp.detection, ClutterModel::uniform_poisson(sp.clutter_rate, -f0, f0), std::move(meas)});
    }
    return out;
}

}  // namespace pbf::doppler
