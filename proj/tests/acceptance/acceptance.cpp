// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria (0 = all pass). Tolerances are fixed here.
#include "pbf/cli.hpp"
#include "pbf/config.hpp"
#include "pbf/evaluation.hpp"

#include "oracle.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace pbf;
namespace fs = std::filesystem;

namespace {

constexpr double kNormTol = 1e-12;
constexpr double kGridTol = 1e-10;
constexpr double kGridSeconds = 1.0;
constexpr double kReductionTol = 1e-12;
constexpr double kKalmanSigmas = 4.0;
constexpr double kKalmanSeconds = 30.0;
constexpr double kPoissonTol = 1e-12;
constexpr double kScenarioEstablishMin = 0.90;
constexpr double kScenarioOspaMax = 2000.0;
constexpr double kScenarioFailLo = 0.02;
constexpr double kScenarioFailHi = 0.30;
constexpr double kDetectionSigmas = 3.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. max(q0, q1) and max weight equal 1 after every predict and update.
Outcome normalization() {
    ScenarioConfig cfg = paper_default_config();
    cfg.smc.particles = 2000;
    const eval::TrialRecord t = eval::run_trial(cfg, 42);
    double worst = 0.0;
    for (const auto& s : t.steps) {
        for (double v : {s.checks.exist_max_pred, s.checks.weight_max_pred, s.checks.exist_max_post,
                         s.checks.weight_max_post}) {
            worst = std::max(worst, std::abs(v - 1.0));
        }
    }
    return {worst <= kNormTol && t.steps.size() == 70,
            fmt("%zu steps, max |max-1| = %.3g (tol %.0e)", t.steps.size(), worst, kNormTol)};
}

// 2. Frozen 31-point grid, one sensor, three steps, exact sup mode.
Outcome grid_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> grid;
    for (int j = -15; j <= 15; ++j) grid.push_back(j);
    Matrix support(1, static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) support(0, static_cast<Eigen::Index>(j)) = grid[j];

    const double birth_var = 25.0, q = 2.0;
    const ExistenceTpm tpm{1.0, 0.05, 0.02, 1.0};
    const BirthModel birth{GaussianPossibility(Vector::Zero(1), Matrix::Constant(1, 1, birth_var))};
    const GaussianTransition rho(Matrix::Identity(1, 1), Matrix::Constant(1, 1, q));

    oracle::Sensor os;
    os.d0 = 0.3;
    os.d1 = 1.0;
    os.lambda = 0.5;
    os.sigma = 1.5;
    os.h = [](double x) { return x; };
    const std::vector<SensorModel> sensors{
        {{os.d0, os.d1},
         ClutterModel::uniform_poisson(os.lambda, -20.0, 20.0),
         ScalarMeasurementModel{[](const Eigen::Ref<const Vector>& x) { return x[0]; }, os.sigma}}};

    const std::vector<std::vector<double>> scans{{2.3}, {3.1, -9.0}, {}};

    std::vector<double> w0;
    for (double x : grid) w0.push_back(std::exp(-0.5 * x * x / birth_var));
    BernoulliState st{1.0, 1.0, ParticleSet(support, w0), true};
    oracle::SetFn ref{1.0, w0};

    double worst = 0.0;
    auto cmp = [&](const BernoulliState& s, const oracle::SetFn& f) {
        const double q1 = f.q1();
        worst = std::max({worst, std::abs(s.q0 - f.empty), std::abs(s.q1 - q1)});
        for (std::size_t j = 0; j < grid.size(); ++j) {
            worst = std::max(worst, std::abs(s.spatial.weights[j] - f.single[j] / q1));
        }
    };
    const std::vector<long> no_parent(grid.size(), -1);
    for (const auto& Z : scans) {
        const auto [q0p, q1p] = predict_existence(st.q0, st.q1, tpm);
        ParticleSet ps(support, predict_spatial_weights(support, no_parent, st, tpm, birth, rho, SupMode::exact));
        normalize(ps);
        const BernoulliState pred{q0p, q1p, ps, true};
        ref = oracle::predict(
            ref, grid, tpm.t00, tpm.t01, tpm.t10, tpm.t11,
            [&](double x) { return std::exp(-0.5 * x * x / birth_var); },
            [&](double x, double xp) { return std::exp(-0.5 * (x - xp) * (x - xp) / q); });
        cmp(pred, ref);
        st = update(pred, {Z}, sensors);
        ref = oracle::update(ref, grid, {os}, {Z});
        cmp(st, ref);
    }
    const double secs = seconds_since(t0);
    return {worst <= kGridTol && secs < kGridSeconds,
            fmt("max |diff| = %.3g (tol %.0e), %.3f s (limit %.0f s)", worst, kGridTol, secs, kGridSeconds)};
}

// 3. (a) no births, certain presence -> plain sup prediction;
//    (b) no clutter, perfect detector, certain presence, one reading -> plain update.
Outcome reductions() {
    const ScenarioConfig cfg = paper_default_config();
    const eval::FilterModel model = eval::FilterModel::from_config(cfg);
    RngStream seed(7);
    const ParticleSet prior = sample_from_possibility(model.birth.birth, 2000, seed);

    double worst_a = 0.0;
    for (SupMode mode : {SupMode::ancestor, SupMode::exact}) {
        SmcControls smc = model.smc;
        smc.particles = prior.size();
        smc.sup_mode = mode;
        const BernoulliState prev{0.5, 1.0, prior, true};
        RngStream r1(99), r2(99);
        const ParticleSet a = predict_spatial(prev, {1.0, 0.0, 0.01, 1.0}, model.birth, model.rho, smc, r1);
        const ParticleSet b = propagate(prior, model.rho, mode, r2);
        worst_a = std::max(worst_a, (a.states - b.states).cwiseAbs().maxCoeff());
        for (std::size_t j = 0; j < a.size(); ++j) worst_a = std::max(worst_a, std::abs(a.weights[j] - b.weights[j]));
    }

    doppler::Scenario sc = cfg.scenario;
    sc.geometry.receivers = {sc.geometry.receivers[0]};
    sc.sensors = {sc.sensors[0]};
    sc.sensors[0].clutter_rate = 0.0;
    sc.sensors[0].detection = {0.0, 1.0};
    const auto sensors = doppler::sensor_models(sc);
    const double z = doppler::doppler_h(cfg.truth.x1, 0, sc) + 1.0;
    ParticleSet local = prior;
    for (Eigen::Index j = 0; j < local.states.cols(); ++j) {
        local.states.col(j) = cfg.truth.x1 + 0.05 * (local.states.col(j) - Vector(cfg.birth_mean));
    }
    const BernoulliState pred{0.0, 1.0, local, true};
    const BernoulliState post = update(pred, {{z}}, sensors);
    std::vector<double> g(local.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = sensors[0].measurement(z, local.state(j));
    const ParticleSet want = bayes_style_update(local, g);
    double worst_b = std::max(std::abs(post.q1 - 1.0), std::abs(post.q0));
    for (std::size_t j = 0; j < g.size(); ++j) {
        worst_b = std::max(worst_b, std::abs(post.spatial.weights[j] - want.weights[j]));
    }
    return {worst_a <= kReductionTol && worst_b <= kReductionTol,
            fmt("(a) max |diff| = %.3g, (b) max |diff| = %.3g (tol %.0e)", worst_a, worst_b, kReductionTol)};
}

// 4. x_k = x_{k-1} + w, z_k = x_k + v, exact sup mode vs the Kalman filter.
Outcome kalman() {
    const auto t0 = std::chrono::steady_clock::now();
    const double a = 1.0, Q = 0.5, R = 1.0, P0 = 2.0, m0 = 0.0;
    const std::size_t n = 10000;
    RngStream sim(2024), filt(2025);
    double x = m0 + std::sqrt(P0) * sim.normal();

    ParticleSet p = sample_from_possibility(GaussianPossibility(Vector::Constant(1, m0), Matrix::Constant(1, 1, P0)),
                                            n, filt);
    const GaussianTransition rho(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, Q));
    double m = m0, P = P0;
    double worst_ratio = 0.0;
    std::string steps;
    for (int k = 1; k <= 5; ++k) {
        x = a * x + std::sqrt(Q) * sim.normal();
        const double z = x + std::sqrt(R) * sim.normal();

        m = a * m;
        P = a * a * P + Q;
        const double K = P / (P + R);
        m = m + K * (z - m);
        P = (1.0 - K) * P;

        if (effective_size(p.importance) < 0.5 * double(n)) p = resample(p, filt);
        p = propagate(p, rho, SupMode::exact, filt);
        std::vector<double> g(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double r = (z - p.states(0, static_cast<Eigen::Index>(j))) / std::sqrt(R);
            g[j] = std::exp(-0.5 * r * r);
        }
        p = bayes_style_update(p, g);
        const double est = point_estimate(p)[0];
        const double tol = kKalmanSigmas * std::sqrt(P) / std::sqrt(double(n));
        worst_ratio = std::max(worst_ratio, std::abs(est - m) / tol);
        steps += fmt("%s%.2f", k == 1 ? "" : " ", std::abs(est - m) / tol);
    }
    const double secs = seconds_since(t0);
    return {worst_ratio <= 1.0 && secs < kKalmanSeconds,
            fmt("|est-kf| / (4 sigma/sqrt(N)) per step: %s; %.1f s (limit %.0f s)", steps.c_str(), secs,
                kKalmanSeconds)};
}

// 5. Poisson possibility against the PMF ratio p(n) / p(floor(lambda)).
Outcome poisson() {
    double worst = 0.0;
    bool mode_exact = true;
    for (double lambda : {0.5, 4.2, 10.0}) {
        const DiscretePossibility c = poisson_possibility(lambda);
        const double m = std::floor(lambda);
        for (int k = 0; k <= 30; ++k) {
            const double ref =
                std::exp((k - m) * std::log(lambda) - std::lgamma(k + 1.0) + std::lgamma(m + 1.0));
            worst = std::max(worst, std::abs(c(static_cast<std::size_t>(k)) - ref));
        }
        mode_exact = mode_exact && c(static_cast<std::size_t>(m)) == 1.0;
    }
    return {worst <= kPoissonTol && mode_exact,
            fmt("max |c - ratio| = %.3g (tol %.0e), c(floor(lambda)) == 1: %s", worst, kPoissonTol,
                mode_exact ? "yes" : "no")};
}

struct ScenarioStats {
    double establish_rate;
    double steady_ospa;
};

ScenarioStats scenario_stats(double pd_lo, AlphaMode alpha) {
    ScenarioConfig cfg = paper_default_config();
    cfg.smc.particles = 2000;
    cfg.alpha_mode = alpha;
    for (auto& s : cfg.scenario.sensors) s.detection = DetectionPossibility::from_interval(pd_lo, 1.0);
    const eval::McReport rep = eval::run_monte_carlo(cfg, 25, 42);
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 40; i < rep.mean_ospa.size(); ++i) {  // steps k = 41..70
        acc += rep.mean_ospa[i];
        ++cnt;
    }
    return {rep.establishment_rate, acc / double(cnt)};
}

// 6. Default scenario, 25 runs, N = 2000, default presence normalizer.
Outcome default_scenario(std::string& note) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioStats hi = scenario_stats(0.6, AlphaMode::product);
    const ScenarioStats lo = scenario_stats(0.4, AlphaMode::product);
    const double fail_lo = 1.0 - lo.establish_rate;
    const bool ok_hi = hi.establish_rate >= kScenarioEstablishMin && hi.steady_ospa < kScenarioOspaMax;
    const bool ok_lo = fail_lo >= kScenarioFailLo && fail_lo <= kScenarioFailHi;
    const bool ok_order = hi.steady_ospa <= lo.steady_ospa;
    const double secs = seconds_since(t0);

    const ScenarioStats jhi = scenario_stats(0.6, AlphaMode::joint);
    const ScenarioStats jlo = scenario_stats(0.4, AlphaMode::joint);
    note = fmt("joint normalizer (informational): [0.6,1] established %.0f%%, OSPA(k>40) %.0f m; "
               "[0.4,1] not established %.0f%%, OSPA(k>40) %.0f m",
               100 * jhi.establish_rate, jhi.steady_ospa, 100 * (1 - jlo.establish_rate), jlo.steady_ospa);

    return {ok_hi && ok_lo && ok_order && secs < 600.0,
            fmt("[0.6,1] established %.0f%% (>= %.0f%%) %s, OSPA(k>40) %.0f m (< %.0f) %s; "
                "[0.4,1] not established %.0f%% (in [%.0f%%, %.0f%%]) %s, OSPA(k>40) %.0f m; ordering %s; %.0f s",
                100 * hi.establish_rate, 100 * kScenarioEstablishMin,
                hi.establish_rate >= kScenarioEstablishMin ? "ok" : "FAIL", hi.steady_ospa, kScenarioOspaMax,
                hi.steady_ospa < kScenarioOspaMax ? "ok" : "FAIL", 100 * fail_lo, 100 * kScenarioFailLo,
                100 * kScenarioFailHi, ok_lo ? "ok" : "FAIL", lo.steady_ospa, ok_order ? "ok" : "FAIL", secs)};
}

// 7. Simulator detection law exp(-(d/beta)^4) at three ranges.
Outcome detection_rates() {
    const double beta = 12000.0;
    const int trials = 10000;
    RngStream rng(8320);
    bool ok = true;
    std::string detail;
    for (double d : {0.0, 8320.0, 12000.0}) {
        int hits = 0;
        for (int t = 0; t < trials; ++t) hits += doppler::sample_detection(d, beta, rng);
        const double p = doppler::true_detection_prob(d, beta);
        const double rate = double(hits) / trials;
        const double tol = kDetectionSigmas * std::sqrt(p * (1 - p) / trials);
        const bool pass = std::abs(rate - p) <= tol;
        ok = ok && pass;
        detail += fmt("%sd=%.0f: %.4f vs %.4f", detail.empty() ? "" : "; ", d, rate, p);
    }
    // The same law seen through the scan generator (one receiver, no clutter).
    for (double d : {8320.0, 12000.0}) {
        doppler::Scenario sc = paper_default_config().scenario;
        sc.geometry.transmitter = doppler::Point2(-30000.0, 0.0);
        sc.geometry.receivers = {doppler::Point2(0.0, 0.0)};
        sc.sensors = {sc.sensors[0]};
        sc.sensors[0].clutter_rate = 0.0;
        const doppler::TargetState x(d, 0.0, 0.0, 10.0);
        RngStream det(d), clu(d + 1);
        int hits = 0;
        for (int t = 0; t < trials; ++t) hits += !doppler::generate_scan(x, sc, det, clu)[0].empty();
        const double p = doppler::true_detection_prob(d, beta);
        const double rate = double(hits) / trials;
        const bool pass = std::abs(rate - p) <= kDetectionSigmas * std::sqrt(p * (1 - p) / trials);
        ok = ok && pass;
        detail += fmt("; scans d=%.0f: %.4f", d, rate);
    }
    return {ok, detail + fmt(" (tol %.0f binomial sigma)", kDetectionSigmas)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 8. Two CLI invocations at different thread counts.
Outcome determinism() {
    const fs::path root = fs::temp_directory_path() / "pbf_acceptance_det";
    fs::remove_all(root);
    std::ostringstream out, err;
    auto invoke = [&](const std::string& dir, const std::string& threads) {
        return cli::run_command({"run", "--config", "paper-default", "--runs", "5", "--seed", "42", "--out",
                                 (root / dir).string(), "--threads", threads},
                                out, err);
    };
    const int ra = invoke("a", "1");
    const int rb = invoke("b", "4");
    if (ra != 0 || rb != 0) return {false, "run failed: " + err.str()};
    const bool csv_same = slurp(root / "a" / "ospa_mean.csv") == slurp(root / "b" / "ospa_mean.csv");
    auto ja = nlohmann::json::parse(slurp(root / "a" / "report.json"));
    auto jb = nlohmann::json::parse(slurp(root / "b" / "report.json"));
    ja.erase("metadata");
    jb.erase("metadata");
    const bool json_same = ja.dump() == jb.dump();
    fs::remove_all(root);
    return {csv_same && json_same,
            fmt("threads 1 vs 4: ospa_mean.csv %s, report.json (minus metadata) %s", csv_same ? "identical" : "DIFFERS",
                json_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d %-22s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    };
    std::string note;
    report(1, "normalization", normalization);
    report(2, "grid-oracle", grid_oracle);
    report(3, "degenerate-reductions", reductions);
    report(4, "kalman-consistency", kalman);
    report(5, "poisson-possibility", poisson);
    report(6, "default-scenario", [&] { return default_scenario(note); });
    if (!note.empty()) std::printf("  note: %s\n", note.c_str());
    report(7, "detection-law", detection_rates);
    report(8, "determinism", determinism);
    std::printf("%d of 8 criteria failed\n", failed);
    return failed;
}
