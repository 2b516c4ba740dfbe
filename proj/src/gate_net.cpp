#include "tokengate/gate_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>
#include <string>

#include "tokengate/error.hpp"
#include "tokengate/rng.hpp"

namespace tokengate {

namespace {

constexpr char kCheckpointMagic[4] = {'T', 'G', 'C', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_params(const PolicyParams& params) {
    if (params.input_dim == 0 || params.hidden_dim == 0) {
        fail(Errc::invalid_argument, "policy network dimensions must be positive");
    }
    if (params.flat.size() != PolicyParams::size_for(params.input_dim, params.hidden_dim)) {
        fail(Errc::malformed_input, "policy parameter vector has wrong length");
    }
}

void check_shapes(const PolicyParams& params, const SurpriseGrid& h) {
    check_params(params);
    validate(h);
    if (h.channels() != params.input_dim) {
        fail(Errc::dim_mismatch, "surprise grid channel count " + std::to_string(h.channels()) +
                                     " does not match policy input size " +
                                     std::to_string(params.input_dim));
    }
}

// Raw output logit plus hidden activations for one token.
double forward_token(const PolicyParams& params, const float* x, double* hidden_act) {
    const std::uint32_t in = params.input_dim;
    const std::uint32_t hid = params.hidden_dim;
    const double* w1 = params.w_hidden();
    const double* b1 = params.b_hidden();
    const double* w2 = params.w_out();
    double z2 = params.b_out();
    for (std::uint32_t j = 0; j < hid; ++j) {
        const double* row = w1 + std::size_t{j} * in;
        double z = b1[j];
        for (std::uint32_t c = 0; c < in; ++c) z += row[c] * x[c];
        const double a = std::tanh(z);
        if (hidden_act) hidden_act[j] = a;
        z2 += w2[j] * a;
    }
    return z2;
}

} // namespace

RetentionMap RetentionMap::from_probs(std::uint32_t frames, std::uint32_t tokens_per_frame,
                                      std::vector<double> probs) {
    RetentionMap map;
    map.frames = frames;
    map.tokens_per_frame = tokens_per_frame;
    if (probs.size() != map.size()) {
        fail(Errc::dim_mismatch, "probability count does not match T*N");
    }
    map.logits.resize(probs.size());
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const double p = std::clamp(probs[j], kProbMin, 1.0 - kProbMin);
        probs[j] = p;
        map.logits[j] = std::log(p / (1.0 - p));
    }
    map.probs = std::move(probs);
    return map;
}

PolicyParams init_params(std::uint32_t dim, std::uint32_t hidden_dim, std::uint64_t seed) {
    if (dim == 0 || hidden_dim == 0) {
        fail(Errc::invalid_argument, "init_params requires positive dimensions");
    }
    PolicyParams params;
    params.input_dim = 2 * dim;
    params.hidden_dim = hidden_dim;
    params.flat.assign(PolicyParams::size_for(params.input_dim, hidden_dim), 0.0);

    Rng rng = Rng::derive(seed, stream::kParamInit);
    const double bound1 = 1.0 / std::sqrt(static_cast<double>(params.input_dim));
    double* w1 = params.w_hidden();
    for (std::size_t j = 0; j < std::size_t{hidden_dim} * params.input_dim; ++j) {
        w1[j] = rng.uniform_in(-bound1, bound1);
    }
    const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    double* w2 = params.w_out();
    for (std::uint32_t j = 0; j < hidden_dim; ++j) {
        w2[j] = rng.uniform_in(-bound2, bound2);
    }
    // biases stay zero: zero input -> logit 0 -> p = 0.5
    return params;
}

RetentionMap policy_forward(const PolicyParams& params, const SurpriseGrid& h) {
    check_shapes(params, h);
    RetentionMap map;
    map.frames = h.frames;
    map.tokens_per_frame = h.tokens_per_frame;
    map.probs.resize(map.size());
    map.logits.resize(map.size());
    for (std::uint32_t t = 0; t < h.frames; ++t) {
        for (std::uint32_t i = 0; i < h.tokens_per_frame; ++i) {
            const std::size_t flat = std::size_t{t} * h.tokens_per_frame + i;
            const double z = forward_token(params, h.token(t, i), nullptr);
            map.logits[flat] = z;
            map.probs[flat] = std::clamp(sigmoid(z), kProbMin, 1.0 - kProbMin);
        }
    }
    return map;
}

PolicyGrad policy_backward(const PolicyParams& params, const SurpriseGrid& h,
                           std::span<const double> grad_wrt_p) {
    check_shapes(params, h);
    if (grad_wrt_p.size() != h.token_count()) {
        fail(Errc::dim_mismatch, "grad_wrt_p length does not match T*N");
    }

    const std::uint32_t in = params.input_dim;
    const std::uint32_t hid = params.hidden_dim;
    PolicyGrad grad(params.flat.size(), 0.0);
    double* gw1 = grad.data();
    double* gb1 = grad.data() + std::size_t{hid} * in;
    double* gw2 = gb1 + hid;
    double& gb2 = grad[grad.size() - 1];
    const double* w2 = params.w_out();

    std::vector<double> act(hid);
    for (std::uint32_t t = 0; t < h.frames; ++t) {
        for (std::uint32_t i = 0; i < h.tokens_per_frame; ++i) {
            const std::size_t flat = std::size_t{t} * h.tokens_per_frame + i;
            const double gp = grad_wrt_p[flat];
            if (gp == 0.0) continue;
            const float* x = h.token(t, i);
            const double z2 = forward_token(params, x, act.data());
            const double p = sigmoid(z2);
            if (p <= kProbMin || p >= 1.0 - kProbMin) continue; // clamped: flat region
            const double dz2 = gp * p * (1.0 - p);
            gb2 += dz2;
            for (std::uint32_t j = 0; j < hid; ++j) {
                gw2[j] += dz2 * act[j];
                const double dz1 = dz2 * w2[j] * (1.0 - act[j] * act[j]);
                gb1[j] += dz1;
                double* row = gw1 + std::size_t{j} * in;
                for (std::uint32_t c = 0; c < in; ++c) row[c] += dz1 * x[c];
            }
        }
    }
    return grad;
}

std::vector<Mask> sample_masks(const RetentionMap& p, std::uint32_t k_rollouts, std::uint64_t seed) {
    if (k_rollouts == 0) fail(Errc::invalid_argument, "sample_masks requires K >= 1");
    if (p.probs.size() != p.size()) fail(Errc::malformed_input, "retention map size mismatch");

    std::vector<Mask> masks;
    masks.reserve(k_rollouts);
    for (std::uint32_t k = 0; k < k_rollouts; ++k) {
        Rng rng = Rng::derive(seed, k);
        Mask m;
        m.frames = p.frames;
        m.tokens_per_frame = p.tokens_per_frame;
        m.bits.resize(p.size());
        for (std::size_t j = 0; j < p.size(); ++j) {
            m.bits[j] = rng.bernoulli(p.probs[j]) ? 1 : 0;
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

std::size_t retention_budget(std::size_t token_count, double rho) {
    if (!(rho > 0.0) || rho > 1.0) {
        fail(Errc::invalid_argument, "retention ratio must lie in (0, 1]");
    }
    // Small forward slack so exact products like 0.3*10 survive rounding.
    const double exact = rho * static_cast<double>(token_count);
    auto budget = static_cast<std::size_t>(std::floor(exact + 1e-9));
    return std::min(budget, token_count);
}

Mask topk_select(const RetentionMap& p, double rho) {
    if (p.logits.size() != p.size()) fail(Errc::malformed_input, "retention map size mismatch");
    const std::size_t budget = retention_budget(p.size(), rho);
    if (budget == 0) {
        fail(Errc::budget_zero, "floor(rho*T*N) is zero; no token can be retained");
    }

    std::vector<std::uint32_t> order(p.size());
    std::iota(order.begin(), order.end(), 0u);
    std::nth_element(order.begin(), order.begin() + (budget - 1), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                         if (p.logits[a] != p.logits[b]) return p.logits[a] > p.logits[b];
                         return a < b;
                     });

    Mask m = Mask::all_zeros(p.frames, p.tokens_per_frame);
    for (std::size_t r = 0; r < budget; ++r) m.bits[order[r]] = 1;
    return m;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    check_params(ckpt.params);
    for (double v : ckpt.params.flat) {
        if (!std::isfinite(v)) fail(Errc::invalid_value, "checkpoint contains a non-finite parameter");
    }

    std::string buf;
    buf.append(kCheckpointMagic, 4);
    auto put_u32 = [&buf](std::uint32_t v) {
        for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<char>((v >> s) & 0xff));
    };
    auto put_u64 = [&buf](std::uint64_t v) {
        for (int s = 0; s < 64; s += 8) buf.push_back(static_cast<char>((v >> s) & 0xff));
    };
    put_u32(kCheckpointVersion);
    put_u32(ckpt.params.input_dim);
    put_u32(ckpt.params.hidden_dim);
    put_u64(ckpt.train_seed);
    put_u64(ckpt.iteration);
    for (double v : ckpt.params.flat) {
        put_u32(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }

    std::FILE* f = std::fopen(path.string().c_str(), "wb");
    if (!f) fail(Errc::io_error, "cannot create checkpoint: " + path.string());
    const bool ok = std::fwrite(buf.data(), 1, buf.size(), f) == buf.size() && std::fflush(f) == 0;
    std::fclose(f);
    if (!ok) fail(Errc::io_error, "short write: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    std::FILE* f = std::fopen(path.string().c_str(), "rb");
    if (!f) fail(Errc::file_missing, "cannot open checkpoint: " + path.string());
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> guard(f, &std::fclose);

    unsigned char head[32];
    if (std::fread(head, 1, sizeof(head), f) != sizeof(head)) {
        fail(Errc::malformed_header, "checkpoint too short for header: " + path.string());
    }
    if (std::memcmp(head, kCheckpointMagic, 4) != 0) {
        fail(Errc::malformed_header, "bad checkpoint magic: " + path.string());
    }
    auto u32_at = [&head](std::size_t off) {
        std::uint32_t v = 0;
        for (int b = 3; b >= 0; --b) v = (v << 8) | head[off + b];
        return v;
    };
    auto u64_at = [&head](std::size_t off) {
        std::uint64_t v = 0;
        for (int b = 7; b >= 0; --b) v = (v << 8) | head[off + b];
        return v;
    };
    if (u32_at(4) != kCheckpointVersion) {
        fail(Errc::malformed_header, "unsupported checkpoint version: " + path.string());
    }

    Checkpoint ckpt;
    ckpt.params.input_dim = u32_at(8);
    ckpt.params.hidden_dim = u32_at(12);
    ckpt.train_seed = u64_at(16);
    ckpt.iteration = u64_at(24);
    if (ckpt.params.input_dim == 0 || ckpt.params.hidden_dim == 0 ||
        ckpt.params.input_dim % 2 != 0) {
        fail(Errc::malformed_header, "bad checkpoint layer sizes: " + path.string());
    }

    const std::size_t count =
        PolicyParams::size_for(ckpt.params.input_dim, ckpt.params.hidden_dim);
    std::vector<unsigned char> raw(count * 4);
    if (std::fread(raw.data(), 1, raw.size(), f) != raw.size()) {
        fail(Errc::truncated_payload, "checkpoint payload truncated: " + path.string());
    }
    unsigned char probe;
    if (std::fread(&probe, 1, 1, f) != 0) {
        fail(Errc::truncated_payload, "checkpoint payload longer than expected: " + path.string());
    }

    ckpt.params.flat.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
        std::uint32_t bits = 0;
        for (int b = 3; b >= 0; --b) bits = (bits << 8) | raw[j * 4 + b];
        const float v = std::bit_cast<float>(bits);
        if (!std::isfinite(v)) {
            fail(Errc::invalid_value, "checkpoint contains a non-finite parameter: " + path.string());
        }
        ckpt.params.flat[j] = v;
    }
    return ckpt;
}

} // namespace tokengate
