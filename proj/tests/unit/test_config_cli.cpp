#include "pbf/cli.hpp"
#include "pbf/config.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace pbf;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pbf_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_json(const fs::path& dir, const json& j) {
    const fs::path p = dir / "cfg.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

std::string golden(const std::string& name) {
    std::string s = slurp(fs::path(PBF_GOLDEN_DIR) / name);
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

// Every key path in a JSON document; array elements collapse to "[]".
void key_paths(const json& j, const std::string& prefix, std::set<std::string>& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string p = prefix.empty() ? it.key() : prefix + "." + it.key();
            out.insert(p);
            key_paths(it.value(), p, out);
        }
    } else if (j.is_array()) {
        for (const auto& e : j) key_paths(e, prefix + "[]", out);
    }
}

std::string joined(const std::set<std::string>& keys) {
    std::string s;
    for (const auto& k : keys) s += (s.empty() ? "" : "\n") + k;
    return s;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int rc = cli::run_command(args, out, err);
    if (err_text) *err_text = err.str();
    return rc;
}

json tiny_config() {
    return json{{"schema_version", 1},
                {"smc", {{"particles", 200}}},
                {"truth", {{"steps", 6}}},
                {"experiment", {{"runs", 2}, {"seed", 5}}}};
}

}  // namespace

TEST(Config, PaperDefaultValues) {
    ScenarioConfig c = load_config("paper-default");
    const auto& g = c.scenario.geometry;
    EXPECT_EQ(g.transmitter, doppler::Point2(0, 0));
    ASSERT_EQ(g.receivers.size(), 5u);
    EXPECT_EQ(g.receivers[0], doppler::Point2(-8000, 3000));
    EXPECT_EQ(g.receivers[1], doppler::Point2(-9000, 11000));
    EXPECT_EQ(g.receivers[2], doppler::Point2(-2000, 2000));
    EXPECT_EQ(g.receivers[3], doppler::Point2(1000, 11000));
    EXPECT_EQ(g.receivers[4], doppler::Point2(9000, 9000));
    EXPECT_EQ(c.scenario.radar.carrier_hz, 900e6);
    EXPECT_EQ(c.scenario.radar.sample_interval_s, 2.0);
    EXPECT_EQ(c.scenario.radar.process_noise, 0.1);
    EXPECT_EQ(c.scenario.radar.max_doppler_hz, 200.0);
    for (const auto& s : c.scenario.sensors) {
        EXPECT_EQ(s.sigma_hz, 2.5);
        EXPECT_EQ(s.clutter_rate, 0.5);
        EXPECT_EQ(s.beta_true_m, 12e3);
    }
    EXPECT_EQ(c.truth.x1, doppler::TargetState(-4000, 30, 7000, -12));
    EXPECT_EQ(c.truth.steps, 70u);
    EXPECT_EQ(c.smc.particles, 10000u);
    EXPECT_TRUE(c.birth_mean.isZero());
    EXPECT_EQ(c.birth_cov.diagonal(), Eigen::Vector4d(16e6, 900, 16e6, 900));
    EXPECT_EQ(c.tpm.t00, 1.0);
    EXPECT_EQ(c.tpm.t11, 1.0);
    EXPECT_EQ(c.tpm.t01, 0.01);
    EXPECT_EQ(c.tpm.t10, 0.01);
    EXPECT_EQ(c.q0_init, 1.0);
    EXPECT_EQ(c.q1_init, 1.0);
    EXPECT_EQ(c.evaluation.confirm_threshold, 0.5);
    EXPECT_EQ(c.evaluation.ospa.p, 1.0);
    EXPECT_EQ(c.evaluation.ospa.c, 1e4);
    EXPECT_EQ(c.alpha_mode, AlphaMode::product);
}

TEST(Config, ShippedFileMatchesPreset) {
    const ScenarioConfig file = load_config((fs::path(PBF_CONFIG_DIR) / "paper-default.json").string());
    EXPECT_EQ(config_to_json(file), config_to_json(paper_default_config()));
}

TEST(Config, JsonRoundTrip) {
    ScenarioConfig c = paper_default_config();
    c.smc.particles = 1234;
    c.alpha_mode = AlphaMode::joint;
    c.scenario.sensors[2].detection = DetectionPossibility::from_interval(0.8, 1.0);
    const json j = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(j)), j);
}

TEST(Config, RejectsBadTpm) {
    json j = tiny_config();
    j["dynamics"] = {{"tpm", {{"t00", 0.5}, {"t01", 0.5}}}};
    try {
        (void)config_from_json(j);
        FAIL() << "accepted a TPM row without a 1";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("dynamics.tpm"), std::string::npos) << e.what();
    }
}

TEST(Config, RejectsBadDetectionPair) {
    json j = tiny_config();
    j["sensors"] = json::array();
    for (int i = 0; i < 5; ++i) j["sensors"].push_back(json::object());
    j["sensors"][2] = {{"d0", 0.2}, {"d1", 0.3}};
    try {
        (void)config_from_json(j);
        FAIL() << "accepted max(d0, d1) != 1";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("sensors[2]"), std::string::npos) << e.what();
    }
}

TEST(Config, RejectsUnknownKeys) {
    json j = tiny_config();
    j["smc"]["particels"] = 10;
    try {
        (void)config_from_json(j);
        FAIL() << "accepted a misspelt key";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("smc.particels"), std::string::npos) << e.what();
    }
    json k = tiny_config();
    k["extra"] = 1;
    EXPECT_THROW((void)config_from_json(k), ConfigError);
}

TEST(Config, RequiresSchemaVersion) {
    json j = tiny_config();
    j.erase("schema_version");
    EXPECT_THROW((void)config_from_json(j), ConfigError);
    j["schema_version"] = 2;
    EXPECT_THROW((void)config_from_json(j), ConfigError);
}

TEST(Config, RejectsWrongTypesAndRanges) {
    json j = tiny_config();
    j["radar"] = {{"carrier_hz", "fast"}};
    EXPECT_THROW((void)config_from_json(j), ConfigError);
    json k = tiny_config();
    k["radar"] = {{"sample_interval_s", -2.0}};
    EXPECT_THROW((void)config_from_json(k), ConfigError);
    json m = tiny_config();
    m["initial"] = {{"q0", 0.5}, {"q1", 0.5}};
    EXPECT_THROW((void)config_from_json(m), ConfigError);
}

TEST(Config, UnknownPresetOrMissingFile) {
    EXPECT_THROW((void)load_config("no-such-preset.json"), ConfigError);
}

TEST(Cli, ValidateBadConfigFails) {
    const fs::path dir = scratch("bad");
    json j = tiny_config();
    j["sensors"] = json::array({json::object(), json::object(), {{"sigma_hz", -1.0}}, json::object(), json::object()});
    std::string err;
    EXPECT_EQ(run({"validate", "--config", write_json(dir, j).string()}, &err), cli::kExitConfig);
    EXPECT_NE(err.find("sensors[2].sigma_hz"), std::string::npos) << err;
}

TEST(Cli, ValidateGoodConfig) {
    const fs::path dir = scratch("good");
    EXPECT_EQ(run({"validate", "--config", write_json(dir, tiny_config()).string()}), cli::kExitOk);
    EXPECT_EQ(run({"validate", "--config", "paper-default"}), cli::kExitOk);
}

TEST(Cli, BadFlagsAreConfigErrors) {
    EXPECT_EQ(run({"run"}), cli::kExitConfig);
    EXPECT_EQ(run({"run", "--config", "paper-default", "--pd-interval", "0.7"}), cli::kExitConfig);
    EXPECT_EQ(run({"run", "--config", "paper-default", "--pd-interval", "0.2,0.7"}), cli::kExitConfig);
    EXPECT_EQ(run({"run", "--config", "paper-default", "--sup-mode", "nearest"}), cli::kExitConfig);
    EXPECT_EQ(run({"run", "--config", "paper-default", "--alpha", "sum"}), cli::kExitConfig);
    EXPECT_EQ(run({"frobnicate"}), cli::kExitConfig);
}

TEST(Cli, ValidateOnlyWritesNothing) {
    const fs::path dir = scratch("vo");
    EXPECT_EQ(run({"run", "--config", "paper-default", "--validate-only", "--out", (dir / "out").string()}),
              cli::kExitOk);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, OutputSchemaMatchesGolden) {
    const fs::path dir = scratch("schema");
    const fs::path out = dir / "out";
    ASSERT_EQ(run({"run", "--config", write_json(dir, tiny_config()).string(), "--out", out.string(), "--trace"}),
              cli::kExitOk);
    EXPECT_EQ(first_line(out / "ospa_mean.csv"), golden("ospa_mean_header.csv"));
    EXPECT_EQ(first_line(out / "trace_run0.csv"), golden("trace_header.csv"));
    EXPECT_TRUE(fs::exists(out / "trace_run1.csv"));

    const json rep = json::parse(slurp(out / "report.json"));
    std::set<std::string> keys;
    key_paths(rep, "", keys);
    EXPECT_EQ(joined(keys), golden("report_keys.txt"));

    EXPECT_EQ(rep["runs"], 2);
    EXPECT_EQ(rep["seeds"], json::array({5, 6}));
    // Data rows: header + steps 1..6.
    std::ifstream csv(out / "ospa_mean.csv");
    std::size_t lines = 0;
    for (std::string l; std::getline(csv, l);) ++lines;
    EXPECT_EQ(lines, 7u);
}

TEST(Cli, ResolvedConfigReloads) {
    const fs::path dir = scratch("reload");
    const fs::path out = dir / "out";
    ASSERT_EQ(run({"run", "--config", write_json(dir, tiny_config()).string(), "--out", out.string(),
                   "--particles", "150", "--pd-interval", "0.6,1", "--alpha", "joint"}),
              cli::kExitOk);
    const json rep = json::parse(slurp(out / "report.json"));
    ScenarioConfig c = config_from_json(rep["config"]);
    EXPECT_EQ(c.smc.particles, 150u);
    EXPECT_EQ(c.alpha_mode, AlphaMode::joint);
    for (const auto& s : c.scenario.sensors) {
        EXPECT_NEAR(s.detection.d0, 0.4, 1e-15);
        EXPECT_EQ(s.detection.d1, 1.0);
    }
}

TEST(Cli, IdenticalFlagsIdenticalBytes) {
    const fs::path dir = scratch("det");
    const std::string cfg = write_json(dir, tiny_config()).string();
    ASSERT_EQ(run({"run", "--config", cfg, "--out", (dir / "a").string(), "--threads", "1"}), cli::kExitOk);
    ASSERT_EQ(run({"run", "--config", cfg, "--out", (dir / "b").string(), "--threads", "3"}), cli::kExitOk);
    EXPECT_EQ(slurp(dir / "a" / "ospa_mean.csv"), slurp(dir / "b" / "ospa_mean.csv"));
    json ra = json::parse(slurp(dir / "a" / "report.json"));
    json rb = json::parse(slurp(dir / "b" / "report.json"));
    ra.erase("metadata");
    rb.erase("metadata");
    EXPECT_EQ(ra.dump(), rb.dump());
}
