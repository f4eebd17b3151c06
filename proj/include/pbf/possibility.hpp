#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pbf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a possibility object would violate its own invariants
/// (non-SPD covariance, non-positive supremum, bad normalization...).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Gaussian possibility function exp(-0.5 (x-mu)^T P^-1 (x-mu)).
///
/// Unlike the Gaussian PDF there is no normalizing constant: the value at
/// the mean is exactly 1. The Cholesky factor of P is cached at
/// construction, which also rejects matrices that are not SPD.
class GaussianPossibility {
public:
    GaussianPossibility(Vector mean, Matrix covariance);

    [[nodiscard]] const Vector& mean() const { return mean_; }
    [[nodiscard]] const Matrix& covariance() const { return covariance_; }
    [[nodiscard]] const Matrix& cholesky() const { return chol_; }
    [[nodiscard]] Eigen::Index dim() const { return mean_.size(); }

    /// Squared Mahalanobis distance of x from the mean.
    [[nodiscard]] double mahalanobis2(const Eigen::Ref<const Vector>& x) const;
    [[nodiscard]] double log_eval(const Eigen::Ref<const Vector>& x) const;
    [[nodiscard]] double operator()(const Eigen::Ref<const Vector>& x) const;

private:
    Vector mean_;
    Matrix covariance_;
    Matrix chol_;  // lower triangular, P = L L^T
};

/// Free-function form of GaussianPossibility::operator().
[[nodiscard]] double gauss_eval(const Eigen::Ref<const Vector>& x, const GaussianPossibility& g);

/// Discrete possibility function on the non-negative integers.
///
/// Values are stored for n = 0..N_max; beyond that either a closed-form
/// tail (Poisson) or zero is used. max_n c(n) == 1 is checked on build.
class DiscretePossibility {
public:
    /// Finite support: c(n) = values[n], zero beyond.
    static DiscretePossibility from_values(std::vector<double> values);
    /// Poisson possibility, normalized by the PMF at its mode floor(lambda).
    static DiscretePossibility poisson(double lambda);

    [[nodiscard]] double operator()(std::size_t n) const;
    /// c(n) / c(n-1) for n >= 1, computed without forming the two values
    /// when a closed form exists. NaN when both are zero.
    [[nodiscard]] double successor_ratio(std::size_t n) const;
    [[nodiscard]] const std::vector<double>& stored() const { return values_; }
    [[nodiscard]] std::optional<double> poisson_rate() const { return lambda_; }

private:
    DiscretePossibility() = default;
    std::vector<double> values_;
    std::optional<double> lambda_;
};

[[nodiscard]] DiscretePossibility poisson_possibility(double lambda);

/// A bounded probability density together with its (known) supremum.
struct BoundedPdf {
    std::function<double(const Vector&)> density;
    double supremum = 0.0;
};

/// Gaussian PDF parameters; kept separate from GaussianPossibility so the
/// two conversions below are explicit.
struct GaussianPdf {
    Vector mean;
    Matrix covariance;

    [[nodiscard]] double operator()(const Vector& x) const;
};

using PossibilityFn = std::function<double(const Vector&)>;
using ScalarFn = std::function<double(double)>;

/// x -> p(x) / sup p.
[[nodiscard]] PossibilityFn pdf_to_possibility(BoundedPdf pdf);
[[nodiscard]] GaussianPossibility pdf_to_possibility(const GaussianPdf& pdf);

/// Closed-form inverse for the Gaussian case.
[[nodiscard]] GaussianPdf possibility_to_pdf(const GaussianPossibility& pi);

/// Normalized 1-D density x -> pi(x) / integral(pi) on [lo, hi].
struct ScalarPdf {
    ScalarFn possibility;
    double lo = 0.0;
    double hi = 0.0;
    double integral = 0.0;

    [[nodiscard]] double operator()(double x) const;
};

/// Adaptive Gauss-Kronrod quadrature of pi over [lo, hi]; rejects a zero
/// or non-finite integral.
[[nodiscard]] ScalarPdf possibility_to_pdf(ScalarFn pi, double lo, double hi);

}  // namespace pbf
