#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "tokengate/config.hpp"
#include "tokengate/gate_net.hpp"
#include "tokengate/group_rl.hpp"
#include "tokengate/oracle.hpp"
#include "tokengate/synth_gen.hpp"

namespace tokengate {

// Held-out statistics at one retention ratio. The split is by dataset index
// parity: training consumes even indices, evaluation odd ones, so the two
// never overlap for a fixed generator seed.
struct EvalReport {
    double rho = 0.0;
    std::size_t video_count = 0;
    double mean_ce = 0.0;
    double mean_delta_ce = 0.0;
    double mean_sparsity = 0.0;
    double salient_recall = 0.0;
    double mean_prob_salient = 0.0;
    double mean_prob_background = 0.0;
    double safe_fraction = 0.0;
    // pseudo stage only: retention probability by frame kind
    std::optional<double> mean_prob_boundary;
    std::optional<double> mean_prob_interior;
};

nlohmann::json to_json(const EvalReport& report);

// Per-iteration training statistics (kept in memory; aggregated into the
// metrics log every eval cadence).
struct GroupStats {
    std::uint64_t iteration = 0;
    Stage stage = Stage::pseudo;
    std::uint64_t video_index = 0;
    double loss = 0.0;
    double ce_base = 0.0;
    double mean_sparsity = 0.0;   // realized over the K sampled masks
    double safe_fraction = 0.0;   // rollouts with delta_ce > 0
    double mean_delta_ce = 0.0;
};

enum class StageSelection { pseudo_only, drift_only, both };

struct TrainResult {
    PolicyParams params;               // final parameters
    std::uint64_t iterations = 0;
    std::vector<GroupStats> history;   // one entry per training step
    std::filesystem::path checkpoint_path;
    std::filesystem::path stage1_checkpoint_path; // empty unless both stages ran
};

// Two-stage curriculum training. Writes the final checkpoint to
// cfg-independent `checkpoint_path`, the metrics log to `metrics_path`, and —
// when both stages run — the warm-up checkpoint to `<checkpoint_path>.stage1`,
// from which stage two is reloaded. Fully deterministic in (cfg, cfg.seed).
// A non-finite loss aborts with the offending iteration's state dumped next to
// the metrics log.
TrainResult train(const TrainConfig& cfg, StageSelection stages,
                  const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& metrics_path);

// Deterministic held-out videos for a stage (odd dataset indices).
std::vector<LabeledVideo> held_out_videos(const GenConfig& cfg, Stage stage, std::size_t count);

// Evaluate a policy on a fixed video set at one retention ratio.
EvalReport evaluate(const PolicyParams& params, const FrozenReadout& readout,
                    const std::vector<LabeledVideo>& videos, double rho, double tau);

// Apply a trained checkpoint to one token-grid file: global top-K at `rho`,
// mask written to `out_path`. Idempotent.
void compress_file(const std::filesystem::path& checkpoint_path,
                   const std::filesystem::path& tok_path, double rho,
                   const std::filesystem::path& out_path);

FrozenReadout make_readout(const TrainConfig& cfg);

} // namespace tokengate
