#include "pbf/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pbf::kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shapes(const Matrix& targets, const Matrix& sources, std::span<const double> log_w,
                  std::span<double> out) {
    if (targets.rows() != sources.rows()) throw std::invalid_argument("max_log_gauss: dimension mismatch");
    if (static_cast<Eigen::Index>(log_w.size()) != sources.cols())
        throw std::invalid_argument("max_log_gauss: weight count mismatch");
    if (static_cast<Eigen::Index>(out.size()) != targets.cols())
        throw std::invalid_argument("max_log_gauss: output size mismatch");
}

inline double max_log_one(const Matrix& targets, Eigen::Index j, const Matrix& sources,
                          std::span<const double> log_w) {
    const Eigen::Index d = targets.rows();
    const double* t = targets.col(j).data();
    double best = kNegInf;
    for (Eigen::Index i = 0; i < sources.cols(); ++i) {
        const double lw = log_w[static_cast<std::size_t>(i)];
        if (lw == kNegInf) continue;
        const double* s = sources.col(i).data();
        double d2 = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double diff = t[k] - s[k];
            d2 += diff * diff;
        }
        best = std::max(best, lw - 0.5 * d2);
    }
    return best;
}

// Log-likelihood factor of one particle for one sensor; also folds the
// particle into the per-z running sup.
inline double sensor_term(const SensorScan& s, double hx, double log_w, double* sup) {
    double best_hit = kNegInf;
    const double inv_sigma = 1.0 / s.sigma;
    for (std::size_t m = 0; m < s.z.size(); ++m) {
        const double r = (s.z[m] - hx) * inv_sigma;
        const double log_g = -0.5 * r * r;
        best_hit = std::max(best_hit, s.log_b[m] + log_g);
        sup[m] = std::max(sup[m], log_g + log_w);
    }
    return std::max(s.log_miss, s.log_d1 + best_hit);
}

ScanTerms empty_terms(const Matrix& states, std::span<const SensorScan> sensors) {
    ScanTerms out;
    out.log_factor.assign(static_cast<std::size_t>(states.cols()), 0.0);
    out.log_sup.resize(sensors.size());
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (sensors[i].z.size() != sensors[i].log_b.size())
            throw std::invalid_argument("scan_terms: z / log_b size mismatch");
        out.log_sup[i].assign(sensors[i].z.size(), kNegInf);
    }
    return out;
}

}  // namespace

namespace serial {

void max_log_gauss(const Matrix& targets, const Matrix& sources, std::span<const double> log_w,
                   std::span<double> out) {
    check_shapes(targets, sources, log_w, out);
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
        out[static_cast<std::size_t>(j)] = max_log_one(targets, j, sources, log_w);
    }
}

ScanTerms scan_terms(const Matrix& states, std::span<const double> log_w, std::span<const SensorScan> sensors) {
    ScanTerms out = empty_terms(states, sensors);
    for (Eigen::Index j = 0; j < states.cols(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        double acc = 0.0;
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            const double hx = sensors[i].h(states.col(j));
            acc += sensor_term(sensors[i], hx, log_w[ju], out.log_sup[i].data());
        }
        out.log_factor[ju] = acc;
    }
    return out;
}

}  // namespace serial

void max_log_gauss(const Matrix& targets, const Matrix& sources, std::span<const double> log_w,
                   std::span<double> out) {
    check_shapes(targets, sources, log_w, out);
    const Eigen::Index n = targets.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < n; ++j) {
        out[static_cast<std::size_t>(j)] = max_log_one(targets, j, sources, log_w);
    }
}

ScanTerms scan_terms(const Matrix& states, std::span<const double> log_w, std::span<const SensorScan> sensors) {
    ScanTerms out = empty_terms(states, sensors);
    const Eigen::Index n = states.cols();
#pragma omp parallel
    {
        std::vector<std::vector<double>> local(out.log_sup);
#pragma omp for schedule(static)
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            double acc = 0.0;
            for (std::size_t i = 0; i < sensors.size(); ++i) {
                const double hx = sensors[i].h(states.col(j));
                acc += sensor_term(sensors[i], hx, log_w[ju], local[i].data());
            }
            out.log_factor[ju] = acc;
        }
#pragma omp critical(pbf_scan_terms_merge)
        for (std::size_t i = 0; i < local.size(); ++i) {
            for (std::size_t m = 0; m < local[i].size(); ++m) {
                out.log_sup[i][m] = std::max(out.log_sup[i][m], local[i][m]);
            }
        }
    }
    return out;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace pbf::kernels
