#include "pbf/particles.hpp"

#include "pbf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pbf {

namespace {

std::vector<double> logs_of(std::span<const double> w) {
    std::vector<double> out(w.size());
    std::transform(w.begin(), w.end(), out.begin(), [](double v) { return std::log(v); });
    return out;
}

void check_consistent(const ParticleSet& p) {
    if (static_cast<Eigen::Index>(p.weights.size()) != p.states.cols() ||
        p.importance.size() != p.weights.size()) {
        throw std::invalid_argument("ParticleSet: states, weights and importance disagree in length");
    }
}

}  // namespace

ParticleSet::ParticleSet(Matrix states_, std::vector<double> weights_)
    : states(std::move(states_)), weights(std::move(weights_)), importance(weights.size(), 1.0) {
    check_consistent(*this);
}

ParticleSet::ParticleSet(Matrix states_, std::vector<double> weights_, std::vector<double> importance_)
    : states(std::move(states_)), weights(std::move(weights_)), importance(std::move(importance_)) {
    check_consistent(*this);
}

double ParticleSet::max_weight() const {
    return weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
}

void normalize_max(std::vector<double>& w, std::string_view what) {
    const double top = w.empty() ? 0.0 : *std::max_element(w.begin(), w.end());
    if (!(top > 0.0) || !std::isfinite(top)) {
        throw std::domain_error(std::string(what) + ": cannot normalize, maximum is " + std::to_string(top));
    }
    for (double& v : w) v /= top;
}

void normalize(ParticleSet& p) {
    normalize_max(p.weights, "particle weights");
    normalize_max(p.importance, "particle importance");
}

double effective_size(std::span<const double> w) {
    double s = 0.0, s2 = 0.0;
    for (double v : w) {
        s += v;
        s2 += v * v;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

SupMode parse_sup_mode(std::string_view s) {
    if (s == "ancestor") return SupMode::ancestor;
    if (s == "exact") return SupMode::exact;
    throw std::invalid_argument("unknown sup mode '" + std::string(s) + "' (expected ancestor|exact)");
}

std::string_view to_string(SupMode m) { return m == SupMode::exact ? "exact" : "ancestor"; }

GaussianTransition::GaussianTransition(Matrix F, Matrix Q)
    : F_(std::move(F)), noise_(Vector::Zero(Q.rows()), Q) {
    if (F_.rows() != F_.cols() || F_.rows() != noise_.dim()) {
        throw ModelError("GaussianTransition: F and Q dimensions disagree");
    }
}

double GaussianTransition::log_eval(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& prev) const {
    return noise_.log_eval(x - F_ * prev);
}

Vector sample_induced(const GaussianPossibility& g, RngStream& rng) {
    Vector n(g.dim());
    for (Eigen::Index k = 0; k < n.size(); ++k) n[k] = rng.normal();
    return g.mean() + g.cholesky() * n;
}

ParticleSet sample_from_possibility(const GaussianPossibility& pi, std::size_t n, RngStream& rng) {
    if (n == 0) throw std::invalid_argument("sample_from_possibility: need at least one particle");
    ParticleSet out;
    out.states.resize(pi.dim(), static_cast<Eigen::Index>(n));
    out.weights.resize(n);
    out.importance.assign(n, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out.states.col(jj) = sample_induced(pi, rng);
        out.weights[j] = pi(out.states.col(jj));
    }
    normalize_max(out.weights, "sample_from_possibility");
    return out;
}

std::vector<double> sup_propagate_onto(const Matrix& targets, const ParticleSet& prev, const GaussianTransition& rho) {
    const auto L = rho.noise().cholesky().triangularView<Eigen::Lower>();
    const Matrix white_targets = L.solve(targets);
    const Matrix white_sources = L.solve(rho.F() * prev.states);
    const std::vector<double> log_w = logs_of(prev.weights);
    std::vector<double> out(static_cast<std::size_t>(targets.cols()));
    kernels::max_log_gauss(white_targets, white_sources, log_w, out);
    for (double& v : out) v = std::exp(v);
    return out;
}

ParticleSet propagate(const ParticleSet& p, const GaussianTransition& rho, SupMode mode, RngStream& rng) {
    check_consistent(p);
    if (p.size() == 0) throw std::invalid_argument("propagate: empty particle set");
    ParticleSet out;
    out.states.resize(p.dim(), p.states.cols());
    for (Eigen::Index j = 0; j < p.states.cols(); ++j) {
        Vector n(p.dim());
        for (Eigen::Index k = 0; k < n.size(); ++k) n[k] = rng.normal();
        out.states.col(j) = rho.F() * p.states.col(j) + rho.noise().cholesky() * n;
    }
    // Proposal is the induced PDF of rho itself, so in ancestor mode the
    // ratio rho/rho* is 1 and the parent weight carries over.
    out.weights = mode == SupMode::exact ? sup_propagate_onto(out.states, p, rho) : p.weights;
    out.importance = p.importance;
    normalize(out);
    return out;
}

ParticleSet bayes_style_update(const ParticleSet& p, std::span<const double> likelihood) {
    check_consistent(p);
    if (likelihood.size() != p.size()) throw std::invalid_argument("bayes_style_update: likelihood size mismatch");
    ParticleSet out = p;
    for (std::size_t j = 0; j < p.size(); ++j) {
        out.weights[j] *= likelihood[j];
        out.importance[j] *= likelihood[j];
    }
    const double top = *std::max_element(out.weights.begin(), out.weights.end());
    if (!(top > 0.0)) {
        throw std::domain_error("bayes_style_update: likelihood is zero on the whole support");
    }
    normalize(out);
    return out;
}

std::vector<std::size_t> resample_indices(std::span<const double> w, std::size_t n, RngStream& rng) {
    if (w.empty()) throw std::invalid_argument("resample: empty particle set");
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) i = pick(rng.engine());
    return idx;
}

ParticleSet resample(const ParticleSet& p, RngStream& rng) {
    check_consistent(p);
    const std::vector<std::size_t> idx = resample_indices(p.importance, p.size(), rng);
    ParticleSet out;
    out.states.resize(p.dim(), p.states.cols());
    out.weights.resize(p.size());
    out.importance.assign(p.size(), 1.0);
    for (std::size_t j = 0; j < p.size(); ++j) {
        const std::size_t src = idx[j];
        out.states.col(static_cast<Eigen::Index>(j)) = p.states.col(static_cast<Eigen::Index>(src));
        out.weights[j] = p.weights[src];
    }
    normalize_max(out.weights, "resample");
    return out;
}

void regularize(ParticleSet& p, double scale, RngStream& rng) {
    check_consistent(p);
    if (!(scale >= 0.0)) throw std::invalid_argument("regularize: scale must be >= 0");
    if (scale == 0.0 || p.size() < 2) return;
    const double d = static_cast<double>(p.dim());
    const double n = static_cast<double>(p.size());
    const double h = scale * std::pow(4.0 / ((d + 2.0) * n), 1.0 / (d + 4.0));

    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(p.weights.data(), p.states.cols());
    w /= w.sum();
    const Vector mean = p.states * w;
    const Matrix centred = p.states.colwise() - mean;
    const Matrix cov = centred * w.asDiagonal() * centred.transpose();
    Eigen::LLT<Matrix> llt(cov);
    // A collapsed cloud (e.g. a single distinct point) has no spread to
    // borrow a kernel from.
    if (llt.info() != Eigen::Success) return;
    const Matrix L = h * Matrix(llt.matrixL());
    Vector z(p.dim());
    for (Eigen::Index j = 0; j < p.states.cols(); ++j) {
        for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = rng.normal();
        p.states.col(j) += L * z;
    }
}

Vector point_estimate(const ParticleSet& p) {
    check_consistent(p);
    Vector acc = Vector::Zero(p.dim());
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double c = p.weights[j] * p.importance[j];
        acc += c * p.states.col(static_cast<Eigen::Index>(j));
        total += c;
    }
    if (!(total > 0.0)) throw std::domain_error("point_estimate: total weight is zero");
    return acc / total;
}

}  // namespace pbf
