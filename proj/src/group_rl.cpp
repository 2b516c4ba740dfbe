#include "tokengate/group_rl.hpp"

#include <cmath>
#include <string>

#include "tokengate/error.hpp"

namespace tokengate {

double sparsity(const Mask& mask) {
    validate(mask);
    return 1.0 - static_cast<double>(mask.ones()) / static_cast<double>(mask.size());
}

double delta_ce(double ce_base, double ce, double tau) {
    if (!(tau >= 1.0)) fail(Errc::invalid_argument, "tau must be >= 1");
    if (!(ce_base >= 0.0) || !(ce >= 0.0)) {
        fail(Errc::invalid_argument, "cross-entropies must be non-negative");
    }
    return tau * ce_base - ce;
}

void split_advantage(RolloutGroup& group) {
    double sum = 0.0;
    double sq_sum = 0.0;
    std::size_t safe_count = 0;
    for (const RolloutRecord& r : group.records) {
        if (r.delta_ce > 0.0) {
            sum += r.sparsity;
            sq_sum += r.sparsity * r.sparsity;
            ++safe_count;
        }
    }

    double mean = 0.0;
    double stddev = 0.0;
    if (safe_count > 0) {
        mean = sum / static_cast<double>(safe_count);
        const double var = sq_sum / static_cast<double>(safe_count) - mean * mean;
        stddev = std::sqrt(std::max(var, 0.0));
    }

    for (RolloutRecord& r : group.records) {
        if (r.delta_ce > 0.0) {
            r.advantage = r.delta_ce * (r.sparsity - mean) / (stddev + group.epsilon);
        } else {
            r.advantage = r.delta_ce * r.sparsity;
        }
    }
}

double bernoulli_logprob(const RetentionMap& p, const Mask& mask) {
    if (p.frames != mask.frames || p.tokens_per_frame != mask.tokens_per_frame ||
        p.probs.size() != mask.bits.size()) {
        fail(Errc::dim_mismatch, "retention map and mask shapes differ");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < p.probs.size(); ++j) {
        total += mask.bits[j] ? std::log(p.probs[j]) : std::log(1.0 - p.probs[j]);
    }
    return total;
}

LossAndGrad policy_loss_and_grad(const PolicyParams& params, const SurpriseGrid& h,
                                 const RolloutGroup& group) {
    if (group.records.empty()) fail(Errc::invalid_argument, "rollout group is empty");
    const RetentionMap p = policy_forward(params, h);

    const double k_norm = 1.0 / static_cast<double>(group.records.size());
    const double token_norm = 1.0 / static_cast<double>(p.size());
    double loss = 0.0;
    std::vector<double> grad_wrt_p(p.size(), 0.0);
    for (const RolloutRecord& r : group.records) {
        if (r.mask.bits.size() != p.size()) {
            fail(Errc::dim_mismatch, "rollout mask shape differs from retention map");
        }
        loss -= k_norm * r.advantage * token_norm * bernoulli_logprob(p, r.mask);
        const double scale = -k_norm * token_norm * r.advantage;
        if (scale == 0.0) continue;
        for (std::size_t j = 0; j < p.size(); ++j) {
            grad_wrt_p[j] += scale * (r.mask.bits[j] ? 1.0 / p.probs[j]
                                                     : -1.0 / (1.0 - p.probs[j]));
        }
    }

    LossAndGrad out;
    out.loss = loss;
    out.grad = policy_backward(params, h, grad_wrt_p);
    return out;
}

void sgd_step(PolicyParams& params, const PolicyGrad& grad, OptimState& opt) {
    if (grad.size() != params.flat.size()) {
        fail(Errc::dim_mismatch, "gradient length does not match parameter count");
    }
    if (!(opt.learning_rate > 0.0)) {
        fail(Errc::invalid_argument, "learning rate must be positive");
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
        if (!std::isfinite(grad[j])) {
            fail(Errc::nonfinite_numeric,
                 "non-finite gradient at coordinate " + std::to_string(j) + " (iteration " +
                     std::to_string(opt.iteration) + ", value " + std::to_string(grad[j]) + ")");
        }
    }
    for (std::size_t j = 0; j < grad.size(); ++j) {
        params.flat[j] -= opt.learning_rate * grad[j];
    }
    ++opt.iteration;
}

RolloutGroup run_group(const PolicyParams& params, const TokenGrid& x, const CeOracle& oracle,
                       std::uint32_t k_rollouts, double tau, double epsilon, std::uint64_t seed,
                       std::uint64_t video_id) {
    if (k_rollouts == 0) fail(Errc::invalid_argument, "run_group requires K >= 1");
    if (!(tau >= 1.0)) fail(Errc::invalid_argument, "tau must be >= 1");
    if (!(epsilon > 0.0)) fail(Errc::invalid_argument, "epsilon must be positive");

    const SurpriseGrid h = encode_state(x);
    const RetentionMap p = policy_forward(params, h);
    std::vector<Mask> masks = sample_masks(p, k_rollouts, seed);

    RolloutGroup group;
    group.video_id = video_id;
    group.tau = tau;
    group.epsilon = epsilon;
    group.ce_base = oracle.ce_base();
    group.records.reserve(k_rollouts);
    for (std::uint32_t k = 0; k < k_rollouts; ++k) {
        RolloutRecord rec;
        rec.mask = std::move(masks[k]);
        try {
            rec.ce = oracle.ce(rec.mask);
        } catch (const TgError& e) {
            fail(e.code(), "oracle failed on rollout " + std::to_string(k) + " of video " +
                               std::to_string(video_id) + ": " + e.what());
        }
        rec.sparsity = sparsity(rec.mask);
        rec.delta_ce = delta_ce(group.ce_base, rec.ce, tau);
        group.records.push_back(std::move(rec));
    }
    split_advantage(group);
    return group;
}

} // namespace tokengate
