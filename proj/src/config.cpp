#include "pbf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <set>
#include <sstream>

namespace pbf {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string join(const std::string& path, std::string_view key) {
    return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Wraps a JSON object, rejects unknown keys up front and reads optional
// fields in place (missing keys keep the caller's current value).
class Section {
public:
    Section(const json& j, std::string path, std::initializer_list<std::string_view> keys)
        : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
        const std::set<std::string_view> allowed(keys);
        for (const auto& [k, v] : j_.items()) {
            if (!allowed.count(k)) fail(join(path_, k), "unknown key");
        }
    }

    [[nodiscard]] bool has(std::string_view key) const { return j_.contains(std::string(key)); }
    [[nodiscard]] const json& at(std::string_view key) const { return j_.at(std::string(key)); }
    [[nodiscard]] std::string path(std::string_view key) const { return join(path_, key); }

    void read(std::string_view key, double& out) const {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number()) fail(path(key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) fail(path(key), "must be finite");
    }

    void read(std::string_view key, std::size_t& out) const {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) fail(path(key), "expected a non-negative integer");
        out = v.get<std::size_t>();
    }

    void read(std::string_view key, std::uint64_t& out, int) const {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<long long>() < 0)) {
            fail(path(key), "expected a non-negative integer");
        }
        out = v.get<std::uint64_t>();
    }

    void read(std::string_view key, bool& out) const {
        if (!has(key)) return;
        if (!at(key).is_boolean()) fail(path(key), "expected true or false");
        out = at(key).get<bool>();
    }

    template <class Vec>
    void read_vector(std::string_view key, Vec& out) const {
        if (!has(key)) return;
        read_fixed(at(key), path(key), out);
    }

    template <class Vec>
    static void read_fixed(const json& v, const std::string& p, Vec& out) {
        if (!v.is_array() || v.size() != static_cast<std::size_t>(out.size())) {
            fail(p, "expected an array of " + std::to_string(out.size()) + " numbers");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) fail(p + "[" + std::to_string(i) + "]", "expected a number");
            out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
        }
    }

private:
    const json& j_;
    std::string path_;
};

// Model validators report "field: problem"; prefix the section path.
template <class Fn>
void guarded(const std::string& path, Fn&& fn) {
    try {
        fn();
    } catch (const ModelError& e) {
        throw ConfigError(path + "." + e.what());
    }
}

json vec_json(const auto& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

doppler::SensorParams default_sensor() {
    doppler::SensorParams s;
    s.sigma_hz = 2.5;
    s.clutter_rate = 0.5;
    s.detection = DetectionPossibility::from_interval(0.6, 1.0);
    s.beta_true_m = 12e3;
    return s;
}

}  // namespace

void ScenarioConfig::validate() const {
    const auto& g = scenario.geometry;
    if (g.receivers.empty()) fail("geometry.receivers", "at least one receiver is required");
    if (scenario.sensors.size() != g.receivers.size()) {
        fail("sensors", "expected one entry per receiver (" + std::to_string(g.receivers.size()) + "), got " +
                            std::to_string(scenario.sensors.size()));
    }
    guarded("radar", [&] { scenario.radar.validate(); });
    for (std::size_t i = 0; i < scenario.sensors.size(); ++i) {
        guarded("sensors[" + std::to_string(i) + "]", [&] { scenario.sensors[i].validate(); });
    }
    guarded("dynamics.tpm", [&] { tpm.validate(); });
    try {
        (void)GaussianPossibility(birth_mean, birth_cov);
    } catch (const ModelError& e) {
        fail("birth.covariance", e.what());
    }
    if (!(q0_init >= 0.0 && q0_init <= 1.0)) fail("initial.q0", "must lie in [0,1]");
    if (!(q1_init >= 0.0 && q1_init <= 1.0)) fail("initial.q1", "must lie in [0,1]");
    if (std::max(q0_init, q1_init) != 1.0) fail("initial", "max(q0, q1) must equal 1");
    if (truth.steps < 1) fail("truth.steps", "must be >= 1");
    if (smc.particles < 2) fail("smc.particles", "must be >= 2");
    if (!(smc.birth_fraction > 0.0 && smc.birth_fraction < 1.0)) fail("smc.birth_fraction", "must lie in (0,1)");
    if (!(smc.resample_threshold >= 0.0 && smc.resample_threshold <= 1.0)) {
        fail("smc.resample_threshold", "must lie in [0,1]");
    }
    if (!(smc.regularization >= 0.0 && std::isfinite(smc.regularization))) {
        fail("smc.regularization", "must be a finite number >= 0");
    }
    if (!(evaluation.ospa.p >= 1.0)) fail("evaluation.ospa_p", "must be >= 1");
    if (!(evaluation.ospa.c > 0.0)) fail("evaluation.ospa_c", "must be positive");
    if (!(evaluation.confirm_threshold >= -1.0 && evaluation.confirm_threshold <= 1.0)) {
        fail("evaluation.confirm_threshold", "must lie in [-1,1]");
    }
    if (evaluation.establish_steps < 1) fail("evaluation.establish_steps", "must be >= 1");
    if (runs < 1) fail("experiment.runs", "must be >= 1");
}

ScenarioConfig paper_default_config() {
    ScenarioConfig c;
    auto& g = c.scenario.geometry;
    g.transmitter = doppler::Point2(0.0, 0.0);
    g.receivers = {{-8000.0, 3000.0}, {-9000.0, 11000.0}, {-2000.0, 2000.0}, {1000.0, 11000.0}, {9000.0, 9000.0}};
    c.scenario.radar = doppler::RadarParams{900e6, doppler::kSpeedOfLight, 200.0, 2.0, 0.1};
    c.scenario.sensors.assign(g.receivers.size(), default_sensor());
    c.tpm = ExistenceTpm{1.0, 0.01, 0.01, 1.0};
    c.birth_mean.setZero();
    c.birth_cov = Eigen::Vector4d(4000.0 * 4000.0, 30.0 * 30.0, 4000.0 * 4000.0, 30.0 * 30.0).asDiagonal();
    c.q0_init = 1.0;
    c.q1_init = 1.0;
    c.truth.x1 << -4000.0, 30.0, 7000.0, -12.0;
    c.truth.steps = 70;
    c.truth.noisy = true;
    c.smc = SmcControls{10000, 0.1, 0.5, 1.0, false, SupMode::ancestor};
    c.evaluation = EvaluationParams{OspaParams{1.0, 1e4}, 0.5, 5};
    c.runs = 100;
    c.seed = 42;
    return c;
}

ScenarioConfig config_from_json(const json& j) {
    ScenarioConfig c = paper_default_config();
    const Section root(j, "", {"schema_version", "geometry", "radar", "sensors", "dynamics", "birth", "initial",
                               "truth", "smc", "filter", "evaluation", "experiment"});
    if (!root.has("schema_version")) fail("schema_version", "missing");
    if (!root.at("schema_version").is_number_integer() ||
        root.at("schema_version").get<long long>() != ScenarioConfig::kSchemaVersion) {
        fail("schema_version", "unsupported (expected " + std::to_string(ScenarioConfig::kSchemaVersion) + ")");
    }

    if (root.has("geometry")) {
        const Section s(root.at("geometry"), "geometry", {"transmitter", "receivers"});
        s.read_vector("transmitter", c.scenario.geometry.transmitter);
        if (s.has("receivers")) {
            const json& arr = s.at("receivers");
            if (!arr.is_array()) fail(s.path("receivers"), "expected an array of [x, y] pairs");
            c.scenario.geometry.receivers.assign(arr.size(), doppler::Point2::Zero());
            for (std::size_t i = 0; i < arr.size(); ++i) {
                Section::read_fixed(arr[i], s.path("receivers") + "[" + std::to_string(i) + "]",
                                    c.scenario.geometry.receivers[i]);
            }
            if (!root.has("sensors")) c.scenario.sensors.assign(arr.size(), default_sensor());
        }
    }
    if (root.has("radar")) {
        const Section s(root.at("radar"), "radar",
                        {"carrier_hz", "speed_of_light", "max_doppler_hz", "sample_interval_s", "process_noise"});
        auto& r = c.scenario.radar;
        s.read("carrier_hz", r.carrier_hz);
        s.read("speed_of_light", r.speed_of_light);
        s.read("max_doppler_hz", r.max_doppler_hz);
        s.read("sample_interval_s", r.sample_interval_s);
        s.read("process_noise", r.process_noise);
    }
    if (root.has("sensors")) {
        const json& arr = root.at("sensors");
        if (!arr.is_array()) fail("sensors", "expected an array with one object per receiver");
        c.scenario.sensors.assign(arr.size(), default_sensor());
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const Section s(arr[i], "sensors[" + std::to_string(i) + "]",
                            {"sigma_hz", "clutter_rate", "d0", "d1", "beta_true_m"});
            auto& sp = c.scenario.sensors[i];
            s.read("sigma_hz", sp.sigma_hz);
            s.read("clutter_rate", sp.clutter_rate);
            s.read("d0", sp.detection.d0);
            s.read("d1", sp.detection.d1);
            s.read("beta_true_m", sp.beta_true_m);
        }
    }
    if (root.has("dynamics")) {
        const Section s(root.at("dynamics"), "dynamics", {"tpm"});
        if (s.has("tpm")) {
            const Section t(s.at("tpm"), "dynamics.tpm", {"t00", "t01", "t10", "t11"});
            t.read("t00", c.tpm.t00);
            t.read("t01", c.tpm.t01);
            t.read("t10", c.tpm.t10);
            t.read("t11", c.tpm.t11);
        }
    }
    if (root.has("birth")) {
        const Section s(root.at("birth"), "birth", {"mean", "covariance"});
        s.read_vector("mean", c.birth_mean);
        if (s.has("covariance")) {
            const json& rows = s.at("covariance");
            if (!rows.is_array() || rows.size() != 4) fail(s.path("covariance"), "expected a 4x4 array of rows");
            for (std::size_t r = 0; r < 4; ++r) {
                Eigen::Vector4d row;
                Section::read_fixed(rows[r], s.path("covariance") + "[" + std::to_string(r) + "]", row);
                c.birth_cov.row(static_cast<Eigen::Index>(r)) = row.transpose();
            }
        }
    }
    if (root.has("initial")) {
        const Section s(root.at("initial"), "initial", {"q0", "q1"});
        s.read("q0", c.q0_init);
        s.read("q1", c.q1_init);
    }
    if (root.has("truth")) {
        const Section s(root.at("truth"), "truth", {"x1", "steps", "noisy"});
        s.read_vector("x1", c.truth.x1);
        s.read("steps", c.truth.steps);
        s.read("noisy", c.truth.noisy);
    }
    if (root.has("smc")) {
        const Section s(root.at("smc"), "smc", {"particles", "birth_fraction", "resample_threshold", "regularization",
                                                     "progressive", "sup_mode"});
        s.read("particles", c.smc.particles);
        s.read("birth_fraction", c.smc.birth_fraction);
        s.read("resample_threshold", c.smc.resample_threshold);
        s.read("regularization", c.smc.regularization);
        s.read("progressive", c.smc.progressive);
        if (s.has("sup_mode")) {
            if (!s.at("sup_mode").is_string()) fail(s.path("sup_mode"), "expected \"ancestor\" or \"exact\"");
            try {
                c.smc.sup_mode = parse_sup_mode(s.at("sup_mode").get<std::string>());
            } catch (const std::invalid_argument& e) {
                fail(s.path("sup_mode"), e.what());
            }
        }
    }
    if (root.has("filter")) {
        const Section s(root.at("filter"), "filter", {"alpha"});
        if (s.has("alpha")) {
            if (!s.at("alpha").is_string()) fail(s.path("alpha"), "expected \"product\" or \"joint\"");
            try {
                c.alpha_mode = parse_alpha_mode(s.at("alpha").get<std::string>());
            } catch (const std::invalid_argument& e) {
                fail(s.path("alpha"), e.what());
            }
        }
    }
    if (root.has("evaluation")) {
        const Section s(root.at("evaluation"), "evaluation",
                        {"ospa_p", "ospa_c", "confirm_threshold", "establish_steps"});
        s.read("ospa_p", c.evaluation.ospa.p);
        s.read("ospa_c", c.evaluation.ospa.c);
        s.read("confirm_threshold", c.evaluation.confirm_threshold);
        s.read("establish_steps", c.evaluation.establish_steps);
    }
    if (root.has("experiment")) {
        const Section s(root.at("experiment"), "experiment", {"runs", "seed"});
        s.read("runs", c.runs);
        s.read("seed", c.seed, 0);
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(std::string_view source) {
    if (source == "paper-default") return paper_default_config();
    std::ifstream in{std::string(source)};
    if (!in) throw ConfigError(std::string(source) + ": cannot open config file");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(source) + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ScenarioConfig& c) {
    json j;
    j["schema_version"] = ScenarioConfig::kSchemaVersion;
    json receivers = json::array();
    for (const auto& r : c.scenario.geometry.receivers) receivers.push_back(vec_json(r));
    j["geometry"] = {{"transmitter", vec_json(c.scenario.geometry.transmitter)}, {"receivers", receivers}};
    const auto& r = c.scenario.radar;
    j["radar"] = {{"carrier_hz", r.carrier_hz},
                  {"speed_of_light", r.speed_of_light},
                  {"max_doppler_hz", r.max_doppler_hz},
                  {"sample_interval_s", r.sample_interval_s},
                  {"process_noise", r.process_noise}};
    json sensors = json::array();
    for (const auto& s : c.scenario.sensors) {
        sensors.push_back({{"sigma_hz", s.sigma_hz},
                           {"clutter_rate", s.clutter_rate},
                           {"d0", s.detection.d0},
                           {"d1", s.detection.d1},
                           {"beta_true_m", s.beta_true_m}});
    }
    j["sensors"] = sensors;
    j["dynamics"] = {{"tpm", {{"t00", c.tpm.t00}, {"t01", c.tpm.t01}, {"t10", c.tpm.t10}, {"t11", c.tpm.t11}}}};
    json cov = json::array();
    for (Eigen::Index i = 0; i < 4; ++i) cov.push_back(vec_json(Eigen::Vector4d(c.birth_cov.row(i).transpose())));
    j["birth"] = {{"mean", vec_json(c.birth_mean)}, {"covariance", cov}};
    j["initial"] = {{"q0", c.q0_init}, {"q1", c.q1_init}};
    j["truth"] = {{"x1", vec_json(c.truth.x1)}, {"steps", c.truth.steps}, {"noisy", c.truth.noisy}};
    j["smc"] = {{"particles", c.smc.particles},
                {"birth_fraction", c.smc.birth_fraction},
                {"resample_threshold", c.smc.resample_threshold},
                {"regularization", c.smc.regularization},
                {"progressive", c.smc.progressive},
                {"sup_mode", std::string(to_string(c.smc.sup_mode))}};
    j["filter"] = {{"alpha", std::string(to_string(c.alpha_mode))}};
    j["evaluation"] = {{"ospa_p", c.evaluation.ospa.p},
                       {"ospa_c", c.evaluation.ospa.c},
                       {"confirm_threshold", c.evaluation.confirm_threshold},
                       {"establish_steps", c.evaluation.establish_steps}};
    j["experiment"] = {{"runs", c.runs}, {"seed", c.seed}};
    return j;
}

}  // namespace pbf
