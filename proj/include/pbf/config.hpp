#pragma once

#include "pbf/bernoulli.hpp"
#include "pbf/doppler.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbf {

/// Raised for malformed or invalid configuration. The message starts with
/// the offending field path, e.g. "sensors[2].sigma_hz: must be positive".
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OspaParams {
    double p = 1.0;
    double c = 1e4;
};

struct EvaluationParams {
    OspaParams ospa;
    double confirm_threshold = 0.5;
    std::size_t establish_steps = 5;  // consecutive confirmed steps
};

struct TruthParams {
    doppler::TargetState x1 = doppler::TargetState::Zero();
    std::size_t steps = 70;
    bool noisy = true;
};

struct ScenarioConfig {
    static constexpr int kSchemaVersion = 1;

    doppler::Scenario scenario;
    ExistenceTpm tpm;
    Eigen::Vector4d birth_mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d birth_cov = Eigen::Matrix4d::Identity();
    double q0_init = 1.0;
    double q1_init = 1.0;
    TruthParams truth;
    SmcControls smc;
    AlphaMode alpha_mode = AlphaMode::product;
    EvaluationParams evaluation;
    std::size_t runs = 100;
    std::uint64_t seed = 42;

    /// Re-checks every invariant; throws ConfigError with a field path.
    void validate() const;
};

[[nodiscard]] ScenarioConfig paper_default_config();

/// `source` is either a preset name ("paper-default") or a path to a JSON
/// file.
[[nodiscard]] ScenarioConfig load_config(std::string_view source);
[[nodiscard]] ScenarioConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json config_to_json(const ScenarioConfig& cfg);

}  // namespace pbf
