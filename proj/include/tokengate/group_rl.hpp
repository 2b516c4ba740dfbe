#pragma once

#include <cstdint>
#include <vector>

#include "tokengate/gate_net.hpp"
#include "tokengate/token_stream.hpp"

namespace tokengate {

// One sampled rollout inside a group: its mask and the derived reward terms.
struct RolloutRecord {
    Mask mask;
    double ce = 0.0;        // oracle cross-entropy under this mask, nats
    double sparsity = 0.0;  // 1 - retained fraction
    double delta_ce = 0.0;  // tau*ce_base - ce
    double advantage = 0.0;
};

// K rollouts sampled for one video, scored against the full-retention baseline.
struct RolloutGroup {
    std::uint64_t video_id = 0;
    double ce_base = 0.0;
    double tau = 1.0;
    double epsilon = 1e-6; // stabilizer in the safe-zone advantage denominator
    std::vector<RolloutRecord> records;
};

struct OptimState {
    double learning_rate = 0.02;
    std::uint64_t iteration = 0;
};

// Downstream evaluator bound to one video: maps a mask to a cross-entropy.
// Implementations must be safe for concurrent const calls.
class CeOracle {
public:
    virtual ~CeOracle() = default;
    virtual double ce(const Mask& mask) const = 0;
    virtual double ce_base() const = 0;
};

// Fraction of pruned tokens: 1 - mean(mask bits).
double sparsity(const Mask& mask);

// tau*ce_base - ce; positive means the mask stayed within the tolerated drop.
double delta_ce(double ce_base, double ce, double tau);

// Split advantages over the group. Safe zone (delta_ce > 0): advantage is
// delta_ce scaled by the sparsity z-score over safe rollouts (population
// standard deviation). Penalty zone (delta_ce <= 0): sparsity-weighted
// delta_ce. Requires delta_ce and sparsity to be filled in.
void split_advantage(RolloutGroup& group);

// sum over tokens of m*log(p) + (1-m)*log(1-p).
double bernoulli_logprob(const RetentionMap& p, const Mask& mask);

struct LossAndGrad {
    double loss = 0.0;
    PolicyGrad grad;
};

// Token-normalized policy-gradient loss over the group,
//   loss = -(1/K) * sum_k A_k * (1/(T*N)) * logprob(p, mask_k),
// with its gradient pushed through the gating network.
LossAndGrad policy_loss_and_grad(const PolicyParams& params, const SurpriseGrid& h,
                                 const RolloutGroup& group);

// Plain SGD: theta -= lr * grad. Rejects non-finite gradients with diagnostics.
void sgd_step(PolicyParams& params, const PolicyGrad& grad, OptimState& opt);

// Full group rollout for one video: encode the state, run the policy, sample
// K masks from substreams of `seed`, score each against the oracle, and fill
// sparsities, delta-CE values, and advantages.
RolloutGroup run_group(const PolicyParams& params, const TokenGrid& x, const CeOracle& oracle,
                       std::uint32_t k_rollouts, double tau, double epsilon, std::uint64_t seed,
                       std::uint64_t video_id = 0);

} // namespace tokengate
