#include "pbf/possibility.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pbf {

namespace {

constexpr double kTailCutoff = 1e-9;

}  // namespace

GaussianPossibility::GaussianPossibility(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
    if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
        throw ModelError("GaussianPossibility: covariance is " + std::to_string(covariance_.rows()) +
                         "x" + std::to_string(covariance_.cols()) + " but mean has dimension " +
                         std::to_string(mean_.size()));
    }
    if (!covariance_.isApprox(covariance_.transpose(), 1e-12)) {
        throw ModelError("GaussianPossibility: covariance is not symmetric");
    }
    Eigen::LLT<Matrix> llt(covariance_);
    if (llt.info() != Eigen::Success) {
        throw ModelError("GaussianPossibility: covariance is not positive definite");
    }
    chol_ = llt.matrixL();
}

double GaussianPossibility::mahalanobis2(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != mean_.size()) {
        throw std::invalid_argument("gauss_eval: dimension mismatch (" + std::to_string(x.size()) +
                                    " vs " + std::to_string(mean_.size()) + ")");
    }
    const Vector white = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return white.squaredNorm();
}

double GaussianPossibility::log_eval(const Eigen::Ref<const Vector>& x) const {
    return -0.5 * mahalanobis2(x);
}

double GaussianPossibility::operator()(const Eigen::Ref<const Vector>& x) const {
    return std::exp(log_eval(x));
}

double gauss_eval(const Eigen::Ref<const Vector>& x, const GaussianPossibility& g) { return g(x); }

// ---- DiscretePossibility ----

DiscretePossibility DiscretePossibility::from_values(std::vector<double> values) {
    if (values.empty()) {
        throw ModelError("DiscretePossibility: no values");
    }
    double top = 0.0;
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ModelError("DiscretePossibility: value outside [0,1]");
        }
        top = std::max(top, v);
    }
    if (top != 1.0) {
        throw ModelError("DiscretePossibility: maximum is " + std::to_string(top) + ", expected 1");
    }
    DiscretePossibility out;
    out.values_ = std::move(values);
    return out;
}

DiscretePossibility DiscretePossibility::poisson(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ModelError("poisson_possibility: lambda must be positive, got " + std::to_string(lambda));
    }
    const auto mode = static_cast<std::size_t>(std::floor(lambda));

    // Walk outward from the mode with the PMF recurrence so that the
    // adjacent ratio c(n-1)/c(n) = n/lambda holds to rounding.
    std::vector<double> values(mode + 1, 0.0);
    values[mode] = 1.0;
    for (std::size_t n = mode; n > 0; --n) {
        values[n - 1] = values[n] * static_cast<double>(n) / lambda;
    }
    for (std::size_t n = mode + 1;; ++n) {
        const double next = values.back() * lambda / static_cast<double>(n);
        values.push_back(next);
        if (next < kTailCutoff) break;
    }

    DiscretePossibility out;
    out.values_ = std::move(values);
    out.lambda_ = lambda;
    return out;
}

double DiscretePossibility::operator()(std::size_t n) const {
    if (n < values_.size()) return values_[n];
    if (!lambda_) return 0.0;
    const double lambda = *lambda_;
    const double mode = std::floor(lambda);
    const double dn = static_cast<double>(n);
    return std::exp((dn - mode) * std::log(lambda) - (std::lgamma(dn + 1.0) - std::lgamma(mode + 1.0)));
}

double DiscretePossibility::successor_ratio(std::size_t n) const {
    if (n == 0) {
        throw std::invalid_argument("DiscretePossibility::successor_ratio: n must be >= 1");
    }
    if (lambda_) return *lambda_ / static_cast<double>(n);
    const double prev = (*this)(n - 1);
    const double cur = (*this)(n);
    if (prev == 0.0) return cur == 0.0 ? std::nan("") : std::numeric_limits<double>::infinity();
    return cur / prev;
}

DiscretePossibility poisson_possibility(double lambda) { return DiscretePossibility::poisson(lambda); }

// ---- transforms ----

double GaussianPdf::operator()(const Vector& x) const {
    const GaussianPossibility shape(mean, covariance);
    const double d = static_cast<double>(mean.size());
    const double log_det = 2.0 * shape.cholesky().diagonal().array().log().sum();
    return std::exp(shape.log_eval(x) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
}

PossibilityFn pdf_to_possibility(BoundedPdf pdf) {
    if (!(pdf.supremum > 0.0) || !std::isfinite(pdf.supremum)) {
        throw ModelError("pdf_to_possibility: supremum must be positive and finite");
    }
    return [density = std::move(pdf.density), sup = pdf.supremum](const Vector& x) {
        return density(x) / sup;
    };
}

GaussianPossibility pdf_to_possibility(const GaussianPdf& pdf) {
    return GaussianPossibility(pdf.mean, pdf.covariance);
}

GaussianPdf possibility_to_pdf(const GaussianPossibility& pi) { return {pi.mean(), pi.covariance()}; }

double ScalarPdf::operator()(double x) const {
    if (x < lo || x > hi) return 0.0;
    return possibility(x) / integral;
}

ScalarPdf possibility_to_pdf(ScalarFn pi, double lo, double hi) {
    if (!(hi > lo)) {
        throw ModelError("possibility_to_pdf: empty domain");
    }
    using boost::math::quadrature::gauss_kronrod;
    const double integral = gauss_kronrod<double, 61>::integrate(pi, lo, hi, 15, 1e-12);
    if (!(integral > 0.0) || !std::isfinite(integral)) {
        throw ModelError("possibility_to_pdf: integral is not finite and positive");
    }
    return {std::move(pi), lo, hi, integral};
}

}  // namespace pbf
