#pragma once

#include "pbf/bernoulli.hpp"
#include "pbf/possibility.hpp"
#include "pbf/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace pbf::doppler {

/// State layout [x, vx, y, vy] in meters and meters/second.
using TargetState = Eigen::Vector4d;
using Point2 = Eigen::Vector2d;

inline constexpr double kSpeedOfLight = 2.99792458e8;

struct Geometry {
    Point2 transmitter = Point2::Zero();
    std::vector<Point2> receivers;
};

struct RadarParams {
    double carrier_hz = 900e6;
    double speed_of_light = kSpeedOfLight;
    double max_doppler_hz = 200.0;  // measurement space is [-f0, f0]
    double sample_interval_s = 2.0;
    double process_noise = 0.1;

    void validate() const;
};

struct SensorParams {
    double sigma_hz = 2.5;
    double clutter_rate = 0.5;
    DetectionPossibility detection{0.4, 1.0};
    double beta_true_m = 12e3;  // simulator only

    void validate() const;
};

struct Scenario {
    Geometry geometry;
    RadarParams radar;
    std::vector<SensorParams> sensors;  // one per receiver
};

struct CvMatrices {
    Eigen::Matrix4d F;
    Eigen::Matrix4d Q;
};

/// F = I2 (x) [[1, T], [0, 1]],  Q = I2 (x) q [[T^3/3, T^2/2], [T^2/2, T]].
[[nodiscard]] CvMatrices cv_matrices(double T, double q);

/// Bistatic Doppler shift seen by receiver i. Throws when the target sits
/// on the transmitter or on that receiver.
[[nodiscard]] double doppler_h(const Eigen::Ref<const Vector>& x, const Point2& transmitter, const Point2& receiver,
                               double carrier_hz, double speed_of_light);
[[nodiscard]] double doppler_h(const Eigen::Ref<const Vector>& x, std::size_t receiver, const Scenario& s);

/// N(z; h_i(x), sigma_i^2) as a possibility; z must lie in [-f0, f0].
[[nodiscard]] double doppler_likelihood(double z, const Eigen::Ref<const Vector>& x, std::size_t receiver,
                                        const Scenario& s);

/// exp(-(d / beta)^4). Ground-truth detection law used only to simulate.
[[nodiscard]] double true_detection_prob(double d, double beta);

/// One detection coin flip at the given range.
[[nodiscard]] bool sample_detection(double range, double beta, RngStream& rng);

[[nodiscard]] std::vector<TargetState> simulate_truth(const TargetState& x1, std::size_t steps, const CvMatrices& cv,
                                                      RngStream& rng, bool noisy);

/// One scan per receiver. Detection coin flips and measurement noise come
/// from `detect_rng`, false alarms from `clutter_rng`.
[[nodiscard]] ScanSet generate_scan(const TargetState& x, const Scenario& s, RngStream& detect_rng,
                                    RngStream& clutter_rng);

/// Filter-side sensor models (detection interval, clutter, Doppler
/// likelihood). Reads nothing from beta_true_m.
[[nodiscard]] std::vector<SensorModel> sensor_models(const Scenario& s);

}  // namespace pbf::doppler
