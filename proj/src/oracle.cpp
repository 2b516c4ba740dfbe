#include "tokengate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tokengate/error.hpp"

namespace tokengate {

namespace {

void check_oracle_inputs(const FrozenReadout& readout, const LabeledVideo& video,
                         const Mask& mask) {
    validate(video.grid);
    validate(mask);
    if (mask.frames != video.grid.frames || mask.tokens_per_frame != video.grid.tokens_per_frame) {
        fail(Errc::dim_mismatch, "mask shape does not match video grid");
    }
    if (readout.dim != video.grid.dim) {
        fail(Errc::dim_mismatch, "readout dimension does not match token dimension");
    }
    if (video.class_label >= readout.class_count) {
        fail(Errc::invalid_argument, "video label " + std::to_string(video.class_label) +
                                         " out of range for " +
                                         std::to_string(readout.class_count) + " classes");
    }
}

} // namespace

FrozenReadout FrozenReadout::make(std::uint32_t class_count, std::uint32_t dim, std::uint64_t seed,
                                  double temperature, double empty_retention_offset) {
    if (class_count == 0 || dim == 0) {
        fail(Errc::invalid_argument, "readout requires positive sizes");
    }
    if (!(temperature > 0.0)) fail(Errc::invalid_argument, "temperature must be positive");
    FrozenReadout r;
    r.class_count = class_count;
    r.dim = dim;
    r.weights = class_directions(class_count, dim, seed);
    r.biases.assign(class_count, 0.0);
    r.temperature = temperature;
    r.empty_retention_offset = empty_retention_offset;
    return r;
}

std::vector<double> oracle_logits(const FrozenReadout& readout, const LabeledVideo& video,
                                  const Mask& mask) {
    check_oracle_inputs(readout, video, mask);

    const std::uint32_t d = readout.dim;
    std::vector<double> pooled(d, 0.0);
    std::size_t retained = 0;
    for (std::uint32_t t = 0; t < video.grid.frames; ++t) {
        for (std::uint32_t i = 0; i < video.grid.tokens_per_frame; ++i) {
            if (!mask.bits[std::size_t{t} * video.grid.tokens_per_frame + i]) continue;
            const float* token = video.grid.token(t, i);
            for (std::uint32_t c = 0; c < d; ++c) pooled[c] += token[c];
            ++retained;
        }
    }
    if (retained == 0) {
        fail(Errc::empty_retention, "mask retains no token");
    }
    const double inv = 1.0 / static_cast<double>(retained);
    for (double& v : pooled) v *= inv;

    std::vector<double> logits(readout.class_count);
    for (std::uint32_t c = 0; c < readout.class_count; ++c) {
        const double* row = readout.weights.data() + std::size_t{c} * d;
        double z = readout.biases[c];
        for (std::uint32_t j = 0; j < d; ++j) z += row[j] * pooled[j];
        logits[c] = z / readout.temperature;
    }
    return logits;
}

double oracle_ce(const FrozenReadout& readout, const LabeledVideo& video, const Mask& mask) {
    const std::vector<double> logits = oracle_logits(readout, video, mask);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum_exp = 0.0;
    for (double z : logits) sum_exp += std::exp(z - max_logit);
    const double ce = std::log(sum_exp) + max_logit - logits[video.class_label];
    return std::max(ce, 0.0); // guard the tiny negative round-off at one-hot extremes
}

double oracle_ce_base(const FrozenReadout& readout, const LabeledVideo& video) {
    return oracle_ce(readout, video,
                     Mask::all_ones(video.grid.frames, video.grid.tokens_per_frame));
}

BoundReadout::BoundReadout(const FrozenReadout& readout, const LabeledVideo& video)
    : readout_(readout), video_(video) {}

double BoundReadout::empty_retention_ce() const {
    return std::log(static_cast<double>(readout_.class_count)) + readout_.empty_retention_offset;
}

double BoundReadout::ce(const Mask& mask) const {
    try {
        return oracle_ce(readout_, video_, mask);
    } catch (const TgError& e) {
        if (e.code() == Errc::empty_retention) return empty_retention_ce();
        throw;
    }
}

double BoundReadout::ce_base() const {
    if (!cached_base_) cached_base_ = oracle_ce_base(readout_, video_);
    return *cached_base_;
}

} // namespace tokengate
