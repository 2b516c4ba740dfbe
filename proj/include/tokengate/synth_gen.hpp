#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tokengate/rng.hpp"
#include "tokengate/token_stream.hpp"

namespace tokengate {

// A generated video with the ground truth the downstream oracle and the
// evaluation metrics rely on.
struct LabeledVideo {
    TokenGrid grid;
    std::uint32_t class_label = 0;
    std::vector<std::uint8_t> saliency;          // T*N, 1 where the token carries class evidence
    std::vector<std::uint32_t> boundary_frames;  // segment starts (pseudo only), includes frame 0

    std::size_t salient_count() const;
    bool is_boundary_frame(std::uint32_t t) const;
};

enum class Stage { pseudo, drift };

struct GenConfig {
    std::uint32_t dim = 16;              // D
    std::uint32_t tokens_per_frame = 64; // N
    std::uint32_t class_count = 8;       // C

    // pseudo stage: sample images_min..images_max images, repeat each for
    // repeats_min..repeats_max frames
    std::uint32_t images_min = 2;
    std::uint32_t images_max = 4;
    std::uint32_t repeats_min = 3;
    std::uint32_t repeats_max = 6;

    // drift stage: AR(1) background with unit-variance-preserving innovations,
    // salient positions doing a bounded random walk with jittered evidence
    std::uint32_t drift_frames_min = 8;
    std::uint32_t drift_frames_max = 32;
    double drift_gamma = 0.9;          // temporal correlation, in [0, 1)
    double drift_noise = 1.0;          // marginal std of background channels
    double drift_evidence_factor = 1.0;

    std::uint32_t salient_per_frame = 0; // 0 -> ceil(N/8)
    double evidence_magnitude = 4.0;
    std::uint64_t seed = 1;
    std::uint64_t evidence_seed = 7; // must match the oracle readout seed

    std::uint32_t salient_count() const;
    void validate() const; // throws Errc::config_error
};

// C unit-norm direction vectors in R^D (row-major), orthogonalized while the
// dimension allows. The frozen readout is built from the same call so that
// class evidence in generated tokens is what the oracle measures.
std::vector<double> class_directions(std::uint32_t class_count, std::uint32_t dim,
                                     std::uint64_t seed);

// Piecewise-constant pseudo-video: repeated synthetic images with abrupt
// boundaries, giving exactly-zero residuals inside segments.
LabeledVideo gen_pseudo_video(const GenConfig& cfg, Rng& rng);

// Smooth drift video: AR(1) background, moving salient tokens, no boundaries.
LabeledVideo gen_drift_video(const GenConfig& cfg, Rng& rng, std::uint32_t frames);

// Deterministic video for a dataset slot: index i always yields the same video
// for a fixed (cfg.seed, stage), independent of generation order.
LabeledVideo gen_video(const GenConfig& cfg, Stage stage, std::uint64_t index);

std::vector<LabeledVideo> gen_dataset(const GenConfig& cfg, std::size_t count, Stage stage);

// Materialize a dataset: one .tok file per video plus a line-delimited
// manifest (id, label, path, salient flat indices, boundary frames).
void write_dataset(const std::vector<LabeledVideo>& videos, const std::filesystem::path& dir,
                   const std::string& manifest_name = "manifest.jsonl");

// Reload manifest entries (paths stay relative to the manifest's directory).
struct ManifestEntry {
    std::uint64_t id = 0;
    std::uint32_t label = 0;
    std::string path;
    std::vector<std::uint64_t> salient_flat;
    std::vector<std::uint32_t> boundary_frames;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);

} // namespace tokengate
