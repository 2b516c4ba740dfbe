#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tokengate/token_stream.hpp"

namespace tokengate {

// Retention probabilities are clamped into [kProbMin, 1-kProbMin] so the
// Bernoulli log-likelihood stays bounded.
inline constexpr double kProbMin = 1e-4;

// Gating network parameters: linear(2D -> hidden) + tanh, linear(hidden -> 1)
// + sigmoid. All parameters live in one flat vector (hidden weights row-major,
// hidden biases, output weights, output bias) so optimizer steps, gradient
// checks, and serialization can treat them uniformly.
struct PolicyParams {
    std::uint32_t input_dim = 0;  // 2*D
    std::uint32_t hidden_dim = 0; // W_h
    std::vector<double> flat;

    std::size_t size() const { return flat.size(); }
    static std::size_t size_for(std::uint32_t input_dim, std::uint32_t hidden_dim) {
        return std::size_t{hidden_dim} * input_dim + hidden_dim + hidden_dim + 1;
    }

    double* w_hidden() { return flat.data(); }                                     // hidden x input
    const double* w_hidden() const { return flat.data(); }
    double* b_hidden() { return flat.data() + std::size_t{hidden_dim} * input_dim; }
    const double* b_hidden() const { return flat.data() + std::size_t{hidden_dim} * input_dim; }
    double* w_out() { return b_hidden() + hidden_dim; }
    const double* w_out() const { return b_hidden() + hidden_dim; }
    double& b_out() { return flat[flat.size() - 1]; }
    double b_out() const { return flat[flat.size() - 1]; }
};

// Gradient with respect to PolicyParams::flat, same layout.
using PolicyGrad = std::vector<double>;

// Per-token retention scores. `probs` are the clamped sigmoid outputs used for
// sampling and log-likelihoods; `logits` keep the raw pre-sigmoid scores so
// top-K ranking is exact even where the clamp saturates the probability.
struct RetentionMap {
    std::uint32_t frames = 0;
    std::uint32_t tokens_per_frame = 0;
    std::vector<double> probs;
    std::vector<double> logits;

    std::size_t size() const { return std::size_t{frames} * tokens_per_frame; }

    // Build from probabilities alone (clamps, then derives logits).
    static RetentionMap from_probs(std::uint32_t frames, std::uint32_t tokens_per_frame,
                                   std::vector<double> probs);
};

// Weights uniform on [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases zero, so an
// all-zero input token maps to retention probability exactly 0.5.
// `dim` is the token-grid channel count D; the network input is 2*D.
PolicyParams init_params(std::uint32_t dim, std::uint32_t hidden_dim, std::uint64_t seed);

// One clamped probability per token; pure function of (params, h).
RetentionMap policy_forward(const PolicyParams& params, const SurpriseGrid& h);

// Reverse-mode gradient of sum_t,i grad_wrt_p[t,i] * p[t,i] with respect to the
// parameters. Tokens whose probability sits at the clamp boundary contribute
// zero gradient.
PolicyGrad policy_backward(const PolicyParams& params, const SurpriseGrid& h,
                           std::span<const double> grad_wrt_p);

// K independent Bernoulli masks; rollout k draws from substream (seed, k).
std::vector<Mask> sample_masks(const RetentionMap& p, std::uint32_t k_rollouts, std::uint64_t seed);

// Deterministic global top-K: keep the floor(rho*T*N) highest-scoring tokens
// over all positions, ties broken by smaller flat index. Positional, never a
// re-ordering. Throws Errc::budget_zero when the budget rounds to zero.
Mask topk_select(const RetentionMap& p, double rho);

// Token budget used by topk_select.
std::size_t retention_budget(std::size_t token_count, double rho);

// Versioned checkpoint: layer sizes and parameters (little-endian f32) plus the
// training seed and iteration counter for resumption.
struct Checkpoint {
    PolicyParams params;
    std::uint64_t train_seed = 0;
    std::uint64_t iteration = 0;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

} // namespace tokengate
