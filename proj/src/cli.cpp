#include "pbf/cli.hpp"

#include "pbf/config.hpp"
#include "pbf/evaluation.hpp"

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/os.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace pbf::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return fmt::format("{:.17g}", v); }

DetectionPossibility parse_pd_interval(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw ConfigError("--pd-interval: expected LO,HI");
    try {
        std::size_t used = 0;
        const std::string a = s.substr(0, comma), b = s.substr(comma + 1);
        const double lo = std::stod(a, &used);
        if (used != a.size()) throw std::invalid_argument(a);
        const double hi = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        return DetectionPossibility::from_interval(lo, hi);
    } catch (const ModelError& e) {
        throw ConfigError(std::string("--pd-interval: ") + e.what());
    } catch (const std::exception&) {
        throw ConfigError("--pd-interval: expected two numbers LO,HI, got '" + s + "'");
    }
}

void write_ospa_csv(const fs::path& file, const eval::McReport& rep) {
    auto out = fmt::output_file(file.string());
    out.print("step,mean_ospa,runs_confirmed_fraction\n");
    for (std::size_t k = 0; k < rep.mean_ospa.size(); ++k) {
        out.print("{},{},{}\n", k + 1, num(rep.mean_ospa[k]), num(rep.confirmed_fraction[k]));
    }
}

std::string join_scan(const Scan& z) {
    std::string s;
    for (std::size_t m = 0; m < z.size(); ++m) {
        if (m) s += ';';
        s += num(z[m]);
    }
    return s;
}

void write_trace_csv(const fs::path& file, const eval::TrialRecord& t) {
    auto out = fmt::output_file(file.string());
    out.print(
        "step,truth_x,truth_vx,truth_y,truth_vy,q0,q1,confirmed,est_x,est_vx,est_y,est_vy,ospa,measurements\n");
    for (const auto& s : t.steps) {
        std::string est = ",,,";
        if (s.estimate) {
            const auto& e = *s.estimate;
            est = fmt::format("{},{},{},{}", num(e[0]), num(e[1]), num(e[2]), num(e[3]));
        }
        std::string meas;
        for (std::size_t i = 0; i < s.scans.size(); ++i) {
            if (i) meas += '|';
            meas += join_scan(s.scans[i]);
        }
        out.print("{},{},{},{},{},{},{},{},{},{},{}\n", s.k, num(s.truth[0]), num(s.truth[1]), num(s.truth[2]),
                  num(s.truth[3]), num(s.q0), num(s.q1), s.confirmed ? 1 : 0, est, num(s.ospa), meas);
    }
}

nlohmann::json report_json(const ScenarioConfig& cfg, const eval::McReport& rep, std::size_t runs,
                           std::uint64_t seed) {
    using nlohmann::json;
    json j;
    j["schema_version"] = 1;
    j["metadata"] = {{"generated_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                                                  std::chrono::floor<std::chrono::seconds>(
                                                      std::chrono::system_clock::now()))}};
    j["runs"] = runs;
    j["base_seed"] = seed;
    j["seeds"] = rep.seeds;
    j["rng_substreams"] = json::array({"truth", "detection", "clutter", "filter"});
    j["establishment_rate"] = rep.establishment_rate;
    j["mean_establishment_step"] = rep.mean_establishment_step ? json(*rep.mean_establishment_step) : json(nullptr);
    json steps = json::array();
    for (const auto& e : rep.establishment_steps) steps.push_back(e ? json(*e) : json(nullptr));
    j["establishment_steps"] = steps;
    j["mean_ospa"] = rep.mean_ospa;
    j["confirmed_fraction"] = rep.confirmed_fraction;
    j["config"] = config_to_json(cfg);
    return j;
}

struct RunOptions {
    std::string config;
    std::optional<std::size_t> runs;
    std::optional<std::uint64_t> seed;
    std::string out = "results";
    std::optional<std::size_t> particles;
    std::optional<std::string> pd_interval;
    std::optional<std::string> sup_mode;
    std::optional<std::string> alpha;
    bool trace = false;
    bool validate_only = false;
    int threads = 0;
};

ScenarioConfig resolve(const RunOptions& o) {
    ScenarioConfig cfg = load_config(o.config);
    if (o.runs) cfg.runs = *o.runs;
    if (o.seed) cfg.seed = *o.seed;
    if (o.particles) cfg.smc.particles = *o.particles;
    if (o.pd_interval) {
        const DetectionPossibility d = parse_pd_interval(*o.pd_interval);
        for (auto& s : cfg.scenario.sensors) s.detection = d;
    }
    if (o.sup_mode) {
        try {
            cfg.smc.sup_mode = parse_sup_mode(*o.sup_mode);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--sup-mode: ") + e.what());
        }
    }
    if (o.alpha) {
        try {
            cfg.alpha_mode = parse_alpha_mode(*o.alpha);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--alpha: ") + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

int do_run(const RunOptions& o, std::ostream& out) {
    const ScenarioConfig cfg = resolve(o);
    if (o.validate_only) {
        out << "config OK\n";
        return kExitOk;
    }
    const eval::McReport rep = eval::run_monte_carlo(cfg, cfg.runs, cfg.seed, o.threads, o.trace);
    const fs::path dir(o.out);
    fs::create_directories(dir);
    write_ospa_csv(dir / "ospa_mean.csv", rep);
    std::ofstream(dir / "report.json") << report_json(cfg, rep, cfg.runs, cfg.seed).dump(2) << '\n';
    if (o.trace) {
        for (std::size_t i = 0; i < rep.trials.size(); ++i) {
            write_trace_csv(dir / fmt::format("trace_run{}.csv", i), rep.trials[i]);
        }
    }
    out << fmt::format("{} runs, establishment rate {}, outputs in {}\n", cfg.runs, rep.establishment_rate,
                       dir.string());
    return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Possibilistic Bernoulli filter: multistatic Doppler tracking experiments", "pbf"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Run Monte-Carlo trials and write results");
    run->add_option("--config", ro.config, "Preset name (paper-default) or JSON file")->required();
    run->add_option("--runs", ro.runs, "Number of Monte-Carlo runs");
    run->add_option("--seed", ro.seed, "Base seed; run i uses seed + i");
    run->add_option("--out", ro.out, "Output directory")->capture_default_str();
    run->add_option("--particles", ro.particles, "Override particle count");
    run->add_option("--pd-interval", ro.pd_interval, "Detection probability interval LO,HI for all sensors");
    run->add_option("--sup-mode", ro.sup_mode, "ancestor | exact");
    run->add_option("--alpha", ro.alpha, "Presence normalizer: product | joint");
    run->add_flag("--trace", ro.trace, "Write trace_run<i>.csv per run");
    run->add_flag("--validate-only", ro.validate_only, "Check the configuration and exit");
    run->add_option("--threads", ro.threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "Check a configuration");
    validate->add_option("--config", validate_config, "Preset name or JSON file")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*validate) {
            (void)load_config(validate_config);
            out << "config OK\n";
            return kExitOk;
        }
        return do_run(ro, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ModelError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace pbf::cli
