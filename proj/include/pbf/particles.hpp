#pragma once

#include "pbf/possibility.hpp"
#include "pbf/rng.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pbf {

/// Weighted support points of a spatial possibility function.
///
/// `weights` hold possibility values at the support points (max exactly 1
/// after normalize). `importance` is the density correction that relates
/// where the points actually sit to the PDF induced by the possibility
/// function: it is 1 when the points were drawn from that PDF, and is
/// multiplied by each likelihood factor until the next resample.
struct ParticleSet {
    Matrix states;  // dim x N, one column per particle
    std::vector<double> weights;
    std::vector<double> importance;

    ParticleSet() = default;
    ParticleSet(Matrix states, std::vector<double> weights);
    ParticleSet(Matrix states, std::vector<double> weights, std::vector<double> importance);

    [[nodiscard]] std::size_t size() const { return weights.size(); }
    [[nodiscard]] Eigen::Index dim() const { return states.rows(); }
    [[nodiscard]] auto state(std::size_t j) const { return states.col(static_cast<Eigen::Index>(j)); }
    [[nodiscard]] double max_weight() const;
};

/// Divides by the maximum so the largest weight is exactly 1. Throws when
/// every weight is zero.
void normalize_max(std::vector<double>& w, std::string_view what);
void normalize(ParticleSet& p);

/// (sum w)^2 / sum w^2.
[[nodiscard]] double effective_size(std::span<const double> w);

enum class SupMode { ancestor, exact };

[[nodiscard]] SupMode parse_sup_mode(std::string_view s);
[[nodiscard]] std::string_view to_string(SupMode m);

/// rho(x | x') = exp(-0.5 (x - F x')^T Q^-1 (x - F x')).
class GaussianTransition {
public:
    GaussianTransition(Matrix F, Matrix Q);

    [[nodiscard]] const Matrix& F() const { return F_; }
    [[nodiscard]] const GaussianPossibility& noise() const { return noise_; }
    [[nodiscard]] double log_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& prev) const;

private:
    Matrix F_;
    GaussianPossibility noise_;  // zero mean, covariance Q
};

/// Draws one sample from the Gaussian PDF induced by a Gaussian
/// possibility (same mean and covariance).
[[nodiscard]] Vector sample_induced(const GaussianPossibility& g, RngStream& rng);

[[nodiscard]] ParticleSet sample_from_possibility(const GaussianPossibility& pi, std::size_t n, RngStream& rng);

/// Exact sup-propagation of `prev` onto fixed support points:
/// out[j] = max_i rho(targets_j | prev_i) w_i. Not normalized.
[[nodiscard]] std::vector<double> sup_propagate_onto(const Matrix& targets, const ParticleSet& prev,
                                                     const GaussianTransition& rho);

[[nodiscard]] ParticleSet propagate(const ParticleSet& p, const GaussianTransition& rho, SupMode mode,
                                    RngStream& rng);

/// w_j <- g_j w_j / max_i g_i w_i.
[[nodiscard]] ParticleSet bayes_style_update(const ParticleSet& p, std::span<const double> likelihood);

/// n multinomial draws of indices with probability proportional to w.
[[nodiscard]] std::vector<std::size_t> resample_indices(std::span<const double> w, std::size_t n, RngStream& rng);

/// Multinomial resampling by importance. Possibility values travel with
/// the selected points (then max-normalized); importance resets to 1.
[[nodiscard]] ParticleSet resample(const ParticleSet& p, RngStream& rng);

/// Regularization after resampling: adds Gaussian kernel noise with
/// covariance (scale * h)^2 C, where C is the covariance of the support
/// points weighted by their possibility values and h is Silverman's
/// bandwidth (4 / ((d + 2) N))^(1 / (d + 4)). Weights travel unchanged.
/// scale == 0 leaves the set untouched.
void regularize(ParticleSet& p, double scale, RngStream& rng);

/// sum_j w_j r_j x_j / sum_j w_j r_j, with r the importance. Reduces to
/// the plain weighted mean when importance is uniform.
[[nodiscard]] Vector point_estimate(const ParticleSet& p);

}  // namespace pbf
