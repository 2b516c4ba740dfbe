#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tokengate {

// A T x N x D stream of visual tokens, row-major over (frame, token, channel).
// Values are stored in 32-bit floats; this is also the on-disk precision.
struct TokenGrid {
    std::uint32_t frames = 0;           // T
    std::uint32_t tokens_per_frame = 0; // N
    std::uint32_t dim = 0;              // D
    std::vector<float> values;          // length T*N*D

    std::size_t token_count() const { return std::size_t{frames} * tokens_per_frame; }
    std::size_t value_count() const { return token_count() * dim; }

    float* frame(std::uint32_t t) { return values.data() + std::size_t{t} * tokens_per_frame * dim; }
    const float* frame(std::uint32_t t) const {
        return values.data() + std::size_t{t} * tokens_per_frame * dim;
    }
    float* token(std::uint32_t t, std::uint32_t i) { return frame(t) + std::size_t{i} * dim; }
    const float* token(std::uint32_t t, std::uint32_t i) const {
        return frame(t) + std::size_t{i} * dim;
    }

    static TokenGrid zeros(std::uint32_t t, std::uint32_t n, std::uint32_t d);
};

// Per-token state [X[t,i]; dX[t,i]] with dX the inter-frame residual under a
// virtual zero frame before the first real one. Channel layout per token:
// first `dim` entries are the original embedding, last `dim` the residual.
struct SurpriseGrid {
    std::uint32_t frames = 0;
    std::uint32_t tokens_per_frame = 0;
    std::uint32_t dim = 0;     // D; channels per token = 2*D
    std::vector<float> values; // length T*N*2D

    std::uint32_t channels() const { return 2 * dim; }
    std::size_t token_count() const { return std::size_t{frames} * tokens_per_frame; }
    const float* token(std::uint32_t t, std::uint32_t i) const {
        return values.data() + (std::size_t{t} * tokens_per_frame + i) * channels();
    }
    float* token(std::uint32_t t, std::uint32_t i) {
        return values.data() + (std::size_t{t} * tokens_per_frame + i) * channels();
    }
};

// Binary keep/drop decisions over the T x N token positions.
struct Mask {
    std::uint32_t frames = 0;
    std::uint32_t tokens_per_frame = 0;
    std::vector<std::uint8_t> bits; // length T*N, each 0 or 1

    std::size_t size() const { return std::size_t{frames} * tokens_per_frame; }
    std::size_t ones() const;

    static Mask all_ones(std::uint32_t t, std::uint32_t n);
    static Mask all_zeros(std::uint32_t t, std::uint32_t n);
};

// Throw Errc::malformed_input (or invalid_value for non-finite entries) if the
// object violates its shape/value invariants.
void validate(const TokenGrid& grid);
void validate(const SurpriseGrid& grid);
void validate(const Mask& mask);

// Inter-frame residual: out[t] = x[t] - x[t-1], with x[-1] treated as zero so
// the first output frame equals the first input frame. Same shape as input,
// computed in storage precision (float).
TokenGrid compute_residual(const TokenGrid& x);

// Concatenate the original embedding with its residual: H[t,i] = [x[t,i]; dx[t,i]].
SurpriseGrid encode_state(const TokenGrid& x);

// .tok / .msk interchange files. Fixed little-endian layout:
//   token grid: magic "TGRD", u32 version, u32 T, u32 N, u32 D, T*N*D f32
//   mask:       magic "TMSK", u32 version, u32 T, u32 N,        T*N  u8
// Write-then-read round-trips bit-exactly.
void write_token_grid(const TokenGrid& grid, const std::filesystem::path& path);
TokenGrid read_token_grid(const std::filesystem::path& path);
void write_mask(const Mask& mask, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);

} // namespace tokengate
