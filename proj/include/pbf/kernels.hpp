#pragma once

// Data-parallel inner loops of the filter. Every kernel has a plain serial
// reference in pbf::kernels::serial and an OpenMP version in pbf::kernels;
// the two must agree bitwise (all reductions here are max, which is
// order-independent). Tests and bench/ compare them.

#include "pbf/possibility.hpp"

#include <functional>
#include <span>
#include <vector>

namespace pbf::kernels {

using MeasurementFn = std::function<double(const Eigen::Ref<const Vector>&)>;

/// One sensor's scan, pre-digested into log-domain constants.
/// log L_i(x) = max(log_miss, log_d1 + max_z [log_b[z] - 0.5 ((z - h(x)) / sigma)^2]).
struct SensorScan {
    MeasurementFn h;
    double sigma = 1.0;
    double log_miss = 0.0;  // log(d0 * clutter scale)
    double log_d1 = 0.0;
    std::vector<double> z;
    std::vector<double> log_b;  // per measurement log clutter-ratio factor
};

struct ScanTerms {
    std::vector<double> log_factor;            // per particle, summed over sensors
    std::vector<std::vector<double>> log_sup;  // per sensor, per z: max_j (log g(z|x_j) + log w_j)
};

namespace serial {

/// out[j] = max_i (log_w[i] - 0.5 |targets_j - sources_i|^2).
void max_log_gauss(const Matrix& targets, const Matrix& sources, std::span<const double> log_w,
                   std::span<double> out);

[[nodiscard]] ScanTerms scan_terms(const Matrix& states, std::span<const double> log_w,
                                   std::span<const SensorScan> sensors);

}  // namespace serial

void max_log_gauss(const Matrix& targets, const Matrix& sources, std::span<const double> log_w,
                   std::span<double> out);

[[nodiscard]] ScanTerms scan_terms(const Matrix& states, std::span<const double> log_w,
                                   std::span<const SensorScan> sensors);

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
[[nodiscard]] int max_threads();
void set_threads(int n);

}  // namespace pbf::kernels
