#pragma once

#include "pbf/kernels.hpp"
#include "pbf/particles.hpp"
#include "pbf/possibility.hpp"
#include "pbf/rng.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace pbf {

/// Presence/absence transition possibilities; row i is the transition out
/// of "present = i". Each row must reach 1.
struct ExistenceTpm {
    double t00 = 1.0;
    double t01 = 0.0;
    double t10 = 0.0;
    double t11 = 1.0;

    void validate() const;
};

/// Possibility of non-detection (d0) and detection (d1). The detection
/// probability is only known to lie in [1 - d0, d1].
struct DetectionPossibility {
    double d0 = 1.0;
    double d1 = 1.0;

    static DetectionPossibility from_interval(double pd_lo, double pd_hi);
    [[nodiscard]] double pd_lower() const { return 1.0 - d0; }
    [[nodiscard]] double pd_upper() const { return d1; }
    void validate() const;
};

/// False-alarm model: cardinality possibility nu and spatial possibility mu
/// on the measurement interval [z_lo, z_hi].
class ClutterModel {
public:
    ClutterModel(DiscretePossibility cardinality, ScalarFn spatial, double z_lo, double z_hi);

    /// Poisson(lambda) count with mu == 1 on [z_lo, z_hi]. lambda == 0 gives
    /// a clutter-free model (nu(0) = 1, nu(n > 0) = 0).
    static ClutterModel uniform_poisson(double lambda, double z_lo, double z_hi);

    [[nodiscard]] const DiscretePossibility& cardinality() const { return cardinality_; }
    [[nodiscard]] double spatial(double z) const;
    [[nodiscard]] bool contains(double z) const { return z >= z_lo_ && z <= z_hi_; }
    [[nodiscard]] double z_lo() const { return z_lo_; }
    [[nodiscard]] double z_hi() const { return z_hi_; }

private:
    DiscretePossibility cardinality_;
    ScalarFn spatial_;
    double z_lo_;
    double z_hi_;
};

struct BirthModel {
    GaussianPossibility birth;
};

/// Scalar measurement possibility g(z|x) = exp(-0.5 ((z - h(x)) / sigma)^2).
struct ScalarMeasurementModel {
    kernels::MeasurementFn h;
    double sigma = 1.0;

    [[nodiscard]] double operator()(double z, const Eigen::Ref<const Vector>& x) const;
};

struct SensorModel {
    DetectionPossibility detection;
    ClutterModel clutter;
    ScalarMeasurementModel measurement;
};

/// Per-sensor finite sets of scalar measurements for one time step.
using Scan = std::vector<double>;
using ScanSet = std::vector<Scan>;

struct BernoulliState {
    double q0 = 1.0;
    double q1 = 1.0;
    ParticleSet spatial;
    /// False while q1 == 0: the particles are kept but carry no meaning.
    bool spatial_valid = true;

    void check_normalized(double tol = 0.0) const;
};

struct SmcControls {
    std::size_t particles = 1000;
    double birth_fraction = 0.1;
    double resample_threshold = 0.5;
    double regularization = 1.0;  // kernel bandwidth scale, 0 disables
    bool progressive = false;     // progressive correction when an update collapses the set
    SupMode sup_mode = SupMode::ancestor;
};

// ---- existence ----

[[nodiscard]] std::pair<double, double> predict_existence(double q0, double q1, const ExistenceTpm& tpm);

// ---- spatial prediction ----

/// Predicted possibility on given support points (no sampling): the max of
/// the birth branch and the sup-propagated survival branch, divided by
/// q1_pred. `ancestors[j]` names the parent of point j for ancestor mode,
/// or -1 for points without a parent (births). Not max-normalized.
[[nodiscard]] std::vector<double> predict_spatial_weights(const Matrix& support, std::span<const long> ancestors,
                                                          const BernoulliState& prev, const ExistenceTpm& tpm,
                                                          const BirthModel& birth, const GaussianTransition& rho,
                                                          SupMode mode);

[[nodiscard]] ParticleSet predict_spatial(const BernoulliState& prev, const ExistenceTpm& tpm,
                                          const BirthModel& birth, const GaussianTransition& rho,
                                          const SmcControls& smc, RngStream& rng);

/// Full prediction step; when q1_pred == 0 the spatial set is flagged
/// invalid instead of throwing.
[[nodiscard]] BernoulliState predict(const BernoulliState& prev, const ExistenceTpm& tpm, const BirthModel& birth,
                                     const GaussianTransition& rho, const SmcControls& smc, RngStream& rng);

// ---- measurement likelihood pieces ----

/// kappa(Z) = nu(|Z|) prod_z mu(z).
[[nodiscard]] double clutter_possibility(std::span<const double> Z, const ClutterModel& clutter);

/// kappa(Z \ {z}) / kappa(Z) in ratio form: [nu(m-1)/nu(m)] / mu(z).
[[nodiscard]] double clutter_ratio(std::span<const double> Z, double z, const ClutterModel& clutter);

/// L(Z|x) = max{d0, d1 max_z [ratio(z) g(z|x)]}; d0 when Z is empty.
[[nodiscard]] double likelihood_factor(std::span<const double> Z, const Eigen::Ref<const Vector>& x,
                                       const SensorModel& sensor);

/// R(Z) = max{d0, d1 max_z [ratio(z) max_j g(z|x_j) w_j]}. Not a
/// possibility: it may exceed 1.
[[nodiscard]] double sensor_ratio(std::span<const double> Z, const ParticleSet& predicted, const SensorModel& sensor);

/// How the presence normalizer is formed for M sensors. `product` is
/// alpha = prod_i R_i (per-sensor sup over the predicted set); `joint`
/// takes the sup of the product, sup_x pi(x) prod_i L_i(x), which is the
/// exact normalizer of the set-valued update. Both agree for M = 1.
enum class AlphaMode { product, joint };

[[nodiscard]] AlphaMode parse_alpha_mode(std::string_view s);
[[nodiscard]] std::string_view to_string(AlphaMode m);

struct UpdateDiagnostics {
    double log_alpha = 0.0;  // log prod_i R_i; +inf for clutter-free scans
    std::vector<double> log_ratio;  // per-sensor log R_i
};

/// Multi-sensor update. Uses a clutter-scale-free form of R_i and L_i
/// (both divided by kappa_i(Z \ {z}) / ratio), which is algebraically the
/// same update but stays finite for clutter-free sensors.
[[nodiscard]] BernoulliState update(const BernoulliState& pred, const ScanSet& scans,
                                    std::span<const SensorModel> sensors, UpdateDiagnostics* diag = nullptr,
                                    AlphaMode alpha_mode = AlphaMode::product);

/// Per-particle log prod_i L_i(Z_i | x_j), up to a constant shared by all
/// particles (the clutter-scale-free form used by update).
[[nodiscard]] std::vector<double> log_likelihood(const Matrix& states, const ScanSet& scans,
                                                 std::span<const SensorModel> sensors);

/// Spatial update by progressive correction. The likelihood is applied as
/// L^lambda_1, L^lambda_2, ... with sum lambda_s = 1; each lambda_s is the
/// largest step keeping N_eff of the importance >= resample_threshold * N,
/// and the set is resampled and regularized between stages. Possibility
/// values are w_pred(ancestor) * L(x), max-normalized. Use when a one-shot
/// update leaves too few effective particles.
[[nodiscard]] ParticleSet progressive_correction(const ParticleSet& pred, const ScanSet& scans,
                                                 std::span<const SensorModel> sensors, const SmcControls& smc,
                                                 RngStream& rng, std::size_t* stages = nullptr);

}  // namespace pbf
