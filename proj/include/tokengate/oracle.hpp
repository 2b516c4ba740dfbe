#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tokengate/group_rl.hpp"
#include "tokengate/synth_gen.hpp"
#include "tokengate/token_stream.hpp"

namespace tokengate {

// Frozen linear-softmax readout over mean-pooled retained tokens. Parameters
// are generated once from a seed and never trained; the class rows are the
// same unit directions the generator injects as class evidence, so retaining
// evidence-carrying tokens lowers the cross-entropy.
struct FrozenReadout {
    std::uint32_t class_count = 0;
    std::uint32_t dim = 0;
    std::vector<double> weights; // class_count x dim
    std::vector<double> biases;  // class_count
    double temperature = 1.0;
    double empty_retention_offset = 2.0; // penalty CE = ln(C) + offset

    static FrozenReadout make(std::uint32_t class_count, std::uint32_t dim, std::uint64_t seed,
                              double temperature = 1.0, double empty_retention_offset = 2.0);
};

// Mean-pool the retained tokens, apply the readout at its temperature, and
// return -log softmax(logits)[label]. Throws Errc::empty_retention when the
// mask keeps nothing.
double oracle_ce(const FrozenReadout& readout, const LabeledVideo& video, const Mask& mask);

// oracle_ce under the all-ones mask.
double oracle_ce_base(const FrozenReadout& readout, const LabeledVideo& video);

// Logits for the retained set (exposed for saliency diagnostics in tests).
std::vector<double> oracle_logits(const FrozenReadout& readout, const LabeledVideo& video,
                                  const Mask& mask);

// CeOracle implementation binding a readout to one video. ce_base is computed
// once and cached. Empty-retention rollouts are scored with the maximal
// penalty ln(C) + offset instead of failing the group.
class BoundReadout final : public CeOracle {
public:
    BoundReadout(const FrozenReadout& readout, const LabeledVideo& video);

    double ce(const Mask& mask) const override;
    double ce_base() const override;
    double empty_retention_ce() const;

private:
    const FrozenReadout& readout_;
    const LabeledVideo& video_;
    mutable std::optional<double> cached_base_;
};

} // namespace tokengate
