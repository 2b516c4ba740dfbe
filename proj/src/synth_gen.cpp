#include "tokengate/synth_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "tokengate/error.hpp"

namespace tokengate {

namespace {

constexpr std::uint64_t kDirectionStream = 0x64697273ULL;

// Distinct positions, order-stable for a given rng state.
std::vector<std::uint32_t> sample_positions(Rng& rng, std::uint32_t n, std::uint32_t k) {
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::uint32_t j = 0; j < k; ++j) {
        const auto pick = static_cast<std::uint32_t>(rng.uniform_int(j, n - 1));
        std::swap(pool[j], pool[pick]);
    }
    pool.resize(k);
    return pool;
}

void add_evidence(float* token, const double* direction, std::uint32_t dim, double magnitude) {
    for (std::uint32_t d = 0; d < dim; ++d) {
        token[d] += static_cast<float>(magnitude * direction[d]);
    }
}

} // namespace

std::size_t LabeledVideo::salient_count() const {
    return std::accumulate(saliency.begin(), saliency.end(), std::size_t{0});
}

bool LabeledVideo::is_boundary_frame(std::uint32_t t) const {
    return std::find(boundary_frames.begin(), boundary_frames.end(), t) != boundary_frames.end();
}

std::uint32_t GenConfig::salient_count() const {
    if (salient_per_frame != 0) return salient_per_frame;
    return (tokens_per_frame + 7) / 8;
}

void GenConfig::validate() const {
    if (dim == 0 || tokens_per_frame == 0 || class_count == 0) {
        fail(Errc::config_error, "generator dimensions must be positive");
    }
    if (images_min < 1 || images_min > images_max) {
        fail(Errc::config_error, "pseudo image count range is empty");
    }
    if (repeats_min < 1 || repeats_min > repeats_max) {
        fail(Errc::config_error, "pseudo repeat range is empty");
    }
    if (drift_frames_min < 2 || drift_frames_min > drift_frames_max) {
        fail(Errc::config_error, "drift frame range is empty or below 2");
    }
    if (!(drift_gamma >= 0.0) || !(drift_gamma < 1.0)) {
        fail(Errc::config_error, "drift_gamma must lie in [0, 1)");
    }
    if (!(drift_noise > 0.0)) fail(Errc::config_error, "drift_noise must be positive");
    if (!(drift_evidence_factor > 0.0)) {
        fail(Errc::config_error, "drift_evidence_factor must be positive");
    }
    if (salient_count() > tokens_per_frame) {
        fail(Errc::config_error, "salient_per_frame exceeds tokens_per_frame");
    }
    if (!(evidence_magnitude >= 0.0)) {
        fail(Errc::config_error, "evidence_magnitude must be non-negative");
    }
}

std::vector<double> class_directions(std::uint32_t class_count, std::uint32_t dim,
                                     std::uint64_t seed) {
    if (class_count == 0 || dim == 0) {
        fail(Errc::invalid_argument, "class_directions requires positive sizes");
    }
    Rng rng = Rng::derive(seed, kDirectionStream);
    std::vector<double> dirs(std::size_t{class_count} * dim);
    for (std::uint32_t c = 0; c < class_count; ++c) {
        double* row = dirs.data() + std::size_t{c} * dim;
        for (std::uint32_t d = 0; d < dim; ++d) row[d] = rng.normal();

        // Gram-Schmidt against earlier rows while independent directions exist.
        std::vector<double> raw(row, row + dim);
        for (std::uint32_t prev = 0; prev < std::min(c, dim); ++prev) {
            const double* q = dirs.data() + std::size_t{prev} * dim;
            double proj = 0.0;
            for (std::uint32_t d = 0; d < dim; ++d) proj += row[d] * q[d];
            for (std::uint32_t d = 0; d < dim; ++d) row[d] -= proj * q[d];
        }
        double norm_sq = 0.0;
        for (std::uint32_t d = 0; d < dim; ++d) norm_sq += row[d] * row[d];
        if (norm_sq < 1e-12) { // dependent (c >= dim): fall back to the raw draw
            std::copy(raw.begin(), raw.end(), row);
            norm_sq = 0.0;
            for (std::uint32_t d = 0; d < dim; ++d) norm_sq += row[d] * row[d];
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::uint32_t d = 0; d < dim; ++d) row[d] *= inv;
    }
    return dirs;
}

LabeledVideo gen_pseudo_video(const GenConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::uint32_t n = cfg.tokens_per_frame;
    const std::uint32_t d = cfg.dim;
    const std::uint32_t k_salient = cfg.salient_count();
    const std::vector<double> dirs = class_directions(cfg.class_count, d, cfg.evidence_seed);

    LabeledVideo video;
    video.class_label = static_cast<std::uint32_t>(rng.uniform_int(0, cfg.class_count - 1));
    const double* evidence = dirs.data() + std::size_t{video.class_label} * d;

    const auto n_images = static_cast<std::uint32_t>(rng.uniform_int(cfg.images_min, cfg.images_max));

    struct ImageSpec {
        std::vector<float> tokens;            // N x D
        std::vector<std::uint32_t> salient;
        std::uint32_t repeats = 0;
    };
    std::vector<ImageSpec> images(n_images);
    std::uint32_t total_frames = 0;
    for (ImageSpec& img : images) {
        img.tokens.resize(std::size_t{n} * d);
        for (float& v : img.tokens) v = static_cast<float>(rng.normal());
        img.salient = sample_positions(rng, n, k_salient);
        for (std::uint32_t pos : img.salient) {
            add_evidence(img.tokens.data() + std::size_t{pos} * d, evidence, d,
                         cfg.evidence_magnitude);
        }
        img.repeats = static_cast<std::uint32_t>(rng.uniform_int(cfg.repeats_min, cfg.repeats_max));
        total_frames += img.repeats;
    }

    video.grid = TokenGrid::zeros(total_frames, n, d);
    video.saliency.assign(std::size_t{total_frames} * n, 0);
    std::uint32_t t = 0;
    for (const ImageSpec& img : images) {
        video.boundary_frames.push_back(t); // segment start; frame 0 counts too
        for (std::uint32_t r = 0; r < img.repeats; ++r, ++t) {
            std::copy(img.tokens.begin(), img.tokens.end(), video.grid.frame(t));
            for (std::uint32_t pos : img.salient) {
                video.saliency[std::size_t{t} * n + pos] = 1;
            }
        }
    }
    return video;
}

LabeledVideo gen_drift_video(const GenConfig& cfg, Rng& rng, std::uint32_t frames) {
    cfg.validate();
    if (frames < 2) fail(Errc::invalid_argument, "drift video needs at least 2 frames");
    const std::uint32_t n = cfg.tokens_per_frame;
    const std::uint32_t d = cfg.dim;
    const std::uint32_t k_salient = cfg.salient_count();
    const std::vector<double> dirs = class_directions(cfg.class_count, d, cfg.evidence_seed);

    LabeledVideo video;
    video.class_label = static_cast<std::uint32_t>(rng.uniform_int(0, cfg.class_count - 1));
    const double* evidence = dirs.data() + std::size_t{video.class_label} * d;
    const double base_magnitude = cfg.evidence_magnitude * cfg.drift_evidence_factor;

    video.grid = TokenGrid::zeros(frames, n, d);
    video.saliency.assign(std::size_t{frames} * n, 0);

    // AR(1) with variance-preserving innovations: stationary marginal
    // N(0, drift_noise^2) per channel.
    const double gamma = cfg.drift_gamma;
    const double innovation = std::sqrt(1.0 - gamma * gamma) * cfg.drift_noise;
    std::vector<double> state(std::size_t{n} * d);
    for (double& v : state) v = cfg.drift_noise * rng.normal();

    std::vector<std::uint32_t> walkers = sample_positions(rng, n, k_salient);

    for (std::uint32_t t = 0; t < frames; ++t) {
        if (t > 0) {
            for (double& v : state) v = gamma * v + innovation * rng.normal();
            for (std::uint32_t& pos : walkers) {
                const auto step = static_cast<int>(rng.uniform_int(0, 2)) - 1; // {-1, 0, +1}
                const int moved = static_cast<int>(pos) + step;
                pos = static_cast<std::uint32_t>(std::clamp(moved, 0, static_cast<int>(n) - 1));
            }
        }
        float* frame = video.grid.frame(t);
        for (std::size_t j = 0; j < state.size(); ++j) frame[j] = static_cast<float>(state[j]);
        for (std::uint32_t pos : walkers) {
            const double magnitude = base_magnitude * (0.75 + 0.5 * rng.uniform());
            add_evidence(frame + std::size_t{pos} * d, evidence, d, magnitude);
            video.saliency[std::size_t{t} * n + pos] = 1;
        }
    }
    return video;
}

LabeledVideo gen_video(const GenConfig& cfg, Stage stage, std::uint64_t index) {
    const std::uint64_t tag = stage == Stage::pseudo ? stream::kPseudoData : stream::kDriftData;
    Rng rng = Rng::derive(cfg.seed, tag + index);
    if (stage == Stage::pseudo) return gen_pseudo_video(cfg, rng);
    const auto frames =
        static_cast<std::uint32_t>(rng.uniform_int(cfg.drift_frames_min, cfg.drift_frames_max));
    return gen_drift_video(cfg, rng, frames);
}

std::vector<LabeledVideo> gen_dataset(const GenConfig& cfg, std::size_t count, Stage stage) {
    if (count == 0) fail(Errc::invalid_argument, "dataset count must be >= 1");
    std::vector<LabeledVideo> videos;
    videos.reserve(count);
    for (std::size_t i = 0; i < count; ++i) videos.push_back(gen_video(cfg, stage, i));
    return videos;
}

void write_dataset(const std::vector<LabeledVideo>& videos, const std::filesystem::path& dir,
                   const std::string& manifest_name) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / manifest_name, std::ios::trunc);
    if (!manifest) fail(Errc::io_error, "cannot create manifest in " + dir.string());

    char name[32];
    for (std::size_t i = 0; i < videos.size(); ++i) {
        const LabeledVideo& v = videos[i];
        std::snprintf(name, sizeof(name), "v%05zu.tok", i);
        write_token_grid(v.grid, dir / name);

        std::vector<std::uint64_t> salient_flat;
        for (std::size_t j = 0; j < v.saliency.size(); ++j) {
            if (v.saliency[j]) salient_flat.push_back(j);
        }
        nlohmann::json line = {
            {"id", i},
            {"label", v.class_label},
            {"path", name},
            {"frames", v.grid.frames},
            {"tokens_per_frame", v.grid.tokens_per_frame},
            {"salient", salient_flat},
            {"boundaries", v.boundary_frames},
        };
        manifest << line.dump() << '\n';
    }
    manifest.flush();
    if (!manifest) fail(Errc::io_error, "manifest write failed in " + dir.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) fail(Errc::file_missing, "cannot open manifest: " + manifest_path.string());
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            fail(Errc::malformed_input,
                 "manifest line " + std::to_string(line_no) + " is not valid JSON");
        }
        ManifestEntry e;
        try {
            e.id = j.at("id").get<std::uint64_t>();
            e.label = j.at("label").get<std::uint32_t>();
            e.path = j.at("path").get<std::string>();
            e.salient_flat = j.at("salient").get<std::vector<std::uint64_t>>();
            e.boundary_frames = j.at("boundaries").get<std::vector<std::uint32_t>>();
        } catch (const nlohmann::json::exception& ex) {
            fail(Errc::malformed_input,
                 "manifest line " + std::to_string(line_no) + ": " + ex.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

} // namespace tokengate
