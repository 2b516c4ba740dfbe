#include "tokengate/trainer.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "tokengate/error.hpp"
#include "tokengate/metrics.hpp"
#include "tokengate/rng.hpp"

namespace tokengate {

namespace {

const char* stage_name(Stage stage) { return stage == Stage::pseudo ? "pseudo" : "drift"; }

nlohmann::json group_stats_json(const GroupStats& s) {
    return {
        {"type", "train"},
        {"iteration", s.iteration},
        {"stage", stage_name(s.stage)},
        {"video_index", s.video_index},
        {"loss", s.loss},
        {"ce_base", s.ce_base},
        {"mean_sparsity", s.mean_sparsity},
        {"safe_fraction", s.safe_fraction},
        {"mean_delta_ce", s.mean_delta_ce},
    };
}

GroupStats summarize(const RolloutGroup& group, Stage stage, std::uint64_t iteration,
                     std::uint64_t video_index, double loss) {
    GroupStats s;
    s.iteration = iteration;
    s.stage = stage;
    s.video_index = video_index;
    s.loss = loss;
    s.ce_base = group.ce_base;
    const auto k = static_cast<double>(group.records.size());
    for (const RolloutRecord& r : group.records) {
        s.mean_sparsity += r.sparsity / k;
        s.mean_delta_ce += r.delta_ce / k;
        if (r.delta_ce > 0.0) s.safe_fraction += 1.0 / k;
    }
    return s;
}

void dump_abort_state(const std::filesystem::path& metrics_path, const PolicyParams& params,
                      const RolloutGroup& group, const GroupStats& stats, double loss) {
    nlohmann::json dump = {
        {"type", "abort"},
        {"iteration", stats.iteration},
        {"stage", stage_name(stats.stage)},
        {"video_index", stats.video_index},
        {"loss", loss},
        {"ce_base", group.ce_base},
        {"tau", group.tau},
        {"params", params.flat},
    };
    for (const RolloutRecord& r : group.records) {
        dump["rollouts"].push_back({{"ce", r.ce},
                                    {"sparsity", r.sparsity},
                                    {"delta_ce", r.delta_ce},
                                    {"advantage", r.advantage}});
    }
    std::filesystem::path dump_path = metrics_path;
    dump_path += ".abort.json";
    std::ofstream out(dump_path, std::ios::trunc);
    out << dump.dump(2) << '\n';
}

struct FrameProbAverages {
    double boundary_sum = 0.0;
    std::size_t boundary_n = 0;
    double interior_sum = 0.0;
    std::size_t interior_n = 0;
};

} // namespace

nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json j = {
        {"type", "eval"},
        {"rho", r.rho},
        {"videos", r.video_count},
        {"mean_ce", r.mean_ce},
        {"mean_delta_ce", r.mean_delta_ce},
        {"mean_sparsity", r.mean_sparsity},
        {"salient_recall", r.salient_recall},
        {"mean_prob_salient", r.mean_prob_salient},
        {"mean_prob_background", r.mean_prob_background},
        {"safe_fraction", r.safe_fraction},
    };
    j["mean_prob_boundary"] =
        r.mean_prob_boundary ? nlohmann::json(*r.mean_prob_boundary) : nlohmann::json();
    j["mean_prob_interior"] =
        r.mean_prob_interior ? nlohmann::json(*r.mean_prob_interior) : nlohmann::json();
    return j;
}

FrozenReadout make_readout(const TrainConfig& cfg) {
    return FrozenReadout::make(cfg.gen.class_count, cfg.gen.dim, cfg.oracle.seed,
                               cfg.oracle.temperature, cfg.oracle.empty_ce_offset);
}

std::vector<LabeledVideo> held_out_videos(const GenConfig& cfg, Stage stage, std::size_t count) {
    std::vector<LabeledVideo> videos;
    videos.reserve(count);
    for (std::size_t j = 0; j < count; ++j) {
        videos.push_back(gen_video(cfg, stage, 2 * j + 1));
    }
    return videos;
}

EvalReport evaluate(const PolicyParams& params, const FrozenReadout& readout,
                    const std::vector<LabeledVideo>& videos, double rho, double tau) {
    if (videos.empty()) fail(Errc::invalid_argument, "evaluate needs at least one video");
    if (!(tau >= 1.0)) fail(Errc::invalid_argument, "tau must be >= 1");

    EvalReport report;
    report.rho = rho;
    report.video_count = videos.size();

    double prob_salient_sum = 0.0;
    std::size_t prob_salient_n = 0;
    double prob_background_sum = 0.0;
    std::size_t prob_background_n = 0;
    double recall_sum = 0.0;
    std::size_t recall_videos = 0;
    FrameProbAverages frame_avgs;

    for (const LabeledVideo& video : videos) {
        const SurpriseGrid h = encode_state(video.grid);
        const RetentionMap p = policy_forward(params, h);
        const Mask mask = topk_select(p, rho);

        const double ce = oracle_ce(readout, video, mask);
        const double dce = delta_ce(oracle_ce_base(readout, video), ce, tau);
        report.mean_ce += ce;
        report.mean_delta_ce += dce;
        if (dce > 0.0) report.safe_fraction += 1.0;
        report.mean_sparsity += sparsity(mask);

        const std::uint32_t n = video.grid.tokens_per_frame;
        std::size_t salient_total = 0;
        std::size_t salient_kept = 0;
        for (std::uint32_t t = 0; t < video.grid.frames; ++t) {
            const bool boundary = video.is_boundary_frame(t);
            for (std::uint32_t i = 0; i < n; ++i) {
                const std::size_t flat = std::size_t{t} * n + i;
                const double prob = p.probs[flat];
                if (video.saliency[flat]) {
                    prob_salient_sum += prob;
                    ++prob_salient_n;
                    ++salient_total;
                    salient_kept += mask.bits[flat];
                } else {
                    prob_background_sum += prob;
                    ++prob_background_n;
                }
                if (!video.boundary_frames.empty()) {
                    if (boundary) {
                        frame_avgs.boundary_sum += prob;
                        ++frame_avgs.boundary_n;
                    } else {
                        frame_avgs.interior_sum += prob;
                        ++frame_avgs.interior_n;
                    }
                }
            }
        }
        if (salient_total > 0) {
            recall_sum += static_cast<double>(salient_kept) / static_cast<double>(salient_total);
            ++recall_videos;
        }
    }

    const auto n_videos = static_cast<double>(videos.size());
    report.mean_ce /= n_videos;
    report.mean_delta_ce /= n_videos;
    report.mean_sparsity /= n_videos;
    report.safe_fraction /= n_videos;
    report.salient_recall = recall_videos > 0 ? recall_sum / static_cast<double>(recall_videos) : 0.0;
    report.mean_prob_salient =
        prob_salient_n > 0 ? prob_salient_sum / static_cast<double>(prob_salient_n) : 0.0;
    report.mean_prob_background =
        prob_background_n > 0 ? prob_background_sum / static_cast<double>(prob_background_n) : 0.0;
    if (frame_avgs.boundary_n > 0) {
        report.mean_prob_boundary = frame_avgs.boundary_sum / static_cast<double>(frame_avgs.boundary_n);
    }
    if (frame_avgs.interior_n > 0) {
        report.mean_prob_interior = frame_avgs.interior_sum / static_cast<double>(frame_avgs.interior_n);
    }
    return report;
}

TrainResult train(const TrainConfig& cfg, StageSelection stages,
                  const std::filesystem::path& checkpoint_path,
                  const std::filesystem::path& metrics_path) {
    cfg.validate();
    const FrozenReadout readout = make_readout(cfg);
    MetricsWriter metrics(metrics_path);

    TrainResult result;
    result.checkpoint_path = checkpoint_path;
    result.params = init_params(cfg.gen.dim, cfg.resolved_hidden(), cfg.seed);
    OptimState opt{cfg.learning_rate, 0};

    const bool run_pseudo = stages != StageSelection::drift_only;
    const bool run_drift = stages != StageSelection::pseudo_only;

    auto run_stage = [&](Stage stage, const StageParams& sp) {
        const std::vector<LabeledVideo> eval_set =
            held_out_videos(cfg.gen, stage, cfg.eval_videos);
        const std::uint64_t rollout_tag =
            stage == Stage::pseudo ? stream::kRollout : stream::kRollout + (std::uint64_t{1} << 32);

        for (std::uint32_t step = 0; step < sp.videos; ++step) {
            const std::uint64_t video_index = 2 * std::uint64_t{step}; // even: training split
            const LabeledVideo video = gen_video(cfg.gen, stage, video_index);
            const BoundReadout oracle(readout, video);
            const std::uint64_t rollout_seed =
                Rng::mix(Rng::mix(cfg.seed) ^ Rng::mix(rollout_tag + step));

            const RolloutGroup group =
                run_group(result.params, video.grid, oracle, cfg.group_size, sp.tau,
                          cfg.advantage_epsilon, rollout_seed, video_index);
            const SurpriseGrid h = encode_state(video.grid);
            const LossAndGrad lg = policy_loss_and_grad(result.params, h, group);

            GroupStats stats = summarize(group, stage, opt.iteration, video_index, lg.loss);
            if (!std::isfinite(lg.loss)) {
                dump_abort_state(metrics_path, result.params, group, stats, lg.loss);
                fail(Errc::nonfinite_numeric,
                     "non-finite loss at iteration " + std::to_string(opt.iteration) +
                         " (state dumped next to metrics log)");
            }
            try {
                sgd_step(result.params, lg.grad, opt);
            } catch (const TgError& e) {
                if (e.code() == Errc::nonfinite_numeric) {
                    dump_abort_state(metrics_path, result.params, group, stats, lg.loss);
                }
                throw;
            }
            result.history.push_back(stats);

            if ((step + 1) % cfg.eval_every == 0 || step + 1 == sp.videos) {
                // windowed training aggregate since the previous eval point
                const std::size_t window = std::min<std::size_t>(cfg.eval_every, step + 1);
                GroupStats agg{};
                for (std::size_t w = result.history.size() - window; w < result.history.size(); ++w) {
                    const GroupStats& g = result.history[w];
                    agg.loss += g.loss;
                    agg.ce_base += g.ce_base;
                    agg.mean_sparsity += g.mean_sparsity;
                    agg.safe_fraction += g.safe_fraction;
                    agg.mean_delta_ce += g.mean_delta_ce;
                }
                nlohmann::json rec = {
                    {"type", "train_window"},
                    {"stage", stage_name(stage)},
                    {"iteration", opt.iteration},
                    {"window", window},
                    {"loss", agg.loss / static_cast<double>(window)},
                    {"ce_base", agg.ce_base / static_cast<double>(window)},
                    {"mean_sparsity", agg.mean_sparsity / static_cast<double>(window)},
                    {"safe_fraction", agg.safe_fraction / static_cast<double>(window)},
                    {"mean_delta_ce", agg.mean_delta_ce / static_cast<double>(window)},
                };
                metrics.append(rec);
                for (double rho : cfg.rho_grid) {
                    EvalReport report = evaluate(result.params, readout, eval_set, rho, sp.tau);
                    nlohmann::json j = to_json(report);
                    j["stage"] = stage_name(stage);
                    j["iteration"] = opt.iteration;
                    metrics.append(j);
                }
            }
        }
    };

    if (run_pseudo) {
        run_stage(Stage::pseudo, cfg.pseudo);
        if (run_drift) {
            // Persist the warm-up checkpoint and reload it, so an in-process
            // curriculum run and a stage-per-invocation run see identical
            // (storage-precision) stage-2 initializations.
            std::filesystem::path stage1 = checkpoint_path;
            stage1 += ".stage1";
            write_checkpoint({result.params, cfg.seed, opt.iteration}, stage1);
            result.stage1_checkpoint_path = stage1;
            result.params = read_checkpoint(stage1).params;
        }
    }
    if (run_drift) {
        run_stage(Stage::drift, cfg.drift);
    }

    result.iterations = opt.iteration;
    write_checkpoint({result.params, cfg.seed, opt.iteration}, checkpoint_path);
    return result;
}

void compress_file(const std::filesystem::path& checkpoint_path,
                   const std::filesystem::path& tok_path, double rho,
                   const std::filesystem::path& out_path) {
    const Checkpoint ckpt = read_checkpoint(checkpoint_path);
    const TokenGrid grid = read_token_grid(tok_path);
    const SurpriseGrid h = encode_state(grid);
    if (h.channels() != ckpt.params.input_dim) {
        fail(Errc::dim_mismatch,
             "token dimension " + std::to_string(grid.dim) + " does not match checkpoint input " +
                 std::to_string(ckpt.params.input_dim / 2));
    }
    const RetentionMap p = policy_forward(ckpt.params, h);
    write_mask(topk_select(p, rho), out_path);
}

} // namespace tokengate
