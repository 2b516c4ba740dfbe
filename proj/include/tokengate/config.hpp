#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tokengate/synth_gen.hpp"

namespace tokengate {

struct OracleConfig {
    std::uint64_t seed = 7; // also the evidence seed; readout rows = class directions
    double temperature = 1.0;
    double empty_ce_offset = 2.0;
};

struct StageParams {
    std::uint32_t videos = 2000;
    double tau = 1.0;
};

// Full training/evaluation configuration. Defaults are the desk-scale
// operating point; every named constant that has a canonical value keeps it
// (K=16, tau 1.01/1.02, learning rate 0.02, rho grid {0.10, 0.25, 0.40}).
struct TrainConfig {
    GenConfig gen;
    std::uint32_t hidden = 0; // 0 -> max(16, D)
    std::uint32_t group_size = 16;
    double learning_rate = 0.02;
    double advantage_epsilon = 1e-6;
    StageParams pseudo{2000, 1.01};
    StageParams drift{2000, 1.02};
    std::uint32_t eval_every = 250;
    std::uint32_t eval_videos = 200;
    std::vector<double> rho_grid{0.10, 0.25, 0.40};
    OracleConfig oracle;
    std::uint64_t seed = 0; // training seed; the CLI requires it explicitly

    std::uint32_t resolved_hidden() const;
    void validate() const; // throws Errc::config_error
};

// Parse a flat key-value config with [section] headers. Unknown keys are
// config errors; omitted keys keep their defaults.
TrainConfig load_train_config(const std::filesystem::path& path);

// Parse the same syntax from a string (exposed for tests).
TrainConfig parse_train_config(const std::string& text);

// Render a config in the accepted syntax (used by `gen --emit-config`-style
// tooling and tests).
std::string dump_train_config(const TrainConfig& cfg);

} // namespace tokengate
