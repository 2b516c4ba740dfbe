#include "tokengate/token_stream.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>
#include <string>

#include "tokengate/error.hpp"

namespace tokengate {

namespace {

constexpr char kGridMagic[4] = {'T', 'G', 'R', 'D'};
constexpr char kMaskMagic[4] = {'T', 'M', 'S', 'K'};
constexpr std::uint32_t kFormatVersion = 1;

// Guard against absurd headers before allocating.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 33;

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode, bool for_read) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) {
        fail(for_read ? Errc::file_missing : Errc::io_error,
             std::string(for_read ? "cannot open file: " : "cannot create file: ") + path.string());
    }
    return f;
}

void put_u32le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

void write_all(std::FILE* f, const void* data, std::size_t n, const std::filesystem::path& path) {
    if (std::fwrite(data, 1, n, f) != n) {
        fail(Errc::io_error, "short write: " + path.string());
    }
}

std::size_t read_some(std::FILE* f, void* data, std::size_t n) { return std::fread(data, 1, n, f); }

void expect_header(const unsigned char* buf, const char magic[4], const std::filesystem::path& path) {
    if (std::memcmp(buf, magic, 4) != 0) {
        fail(Errc::malformed_header, "bad magic bytes: " + path.string());
    }
    const std::uint32_t version = get_u32le(buf + 4);
    if (version != kFormatVersion) {
        fail(Errc::malformed_header,
             "unsupported format version " + std::to_string(version) + ": " + path.string());
    }
}

bool at_eof(std::FILE* f) {
    unsigned char probe;
    return std::fread(&probe, 1, 1, f) == 0;
}

} // namespace

TokenGrid TokenGrid::zeros(std::uint32_t t, std::uint32_t n, std::uint32_t d) {
    TokenGrid g;
    g.frames = t;
    g.tokens_per_frame = n;
    g.dim = d;
    g.values.assign(std::size_t{t} * n * d, 0.0f);
    return g;
}

std::size_t Mask::ones() const {
    return std::accumulate(bits.begin(), bits.end(), std::size_t{0});
}

Mask Mask::all_ones(std::uint32_t t, std::uint32_t n) {
    Mask m;
    m.frames = t;
    m.tokens_per_frame = n;
    m.bits.assign(std::size_t{t} * n, 1);
    return m;
}

Mask Mask::all_zeros(std::uint32_t t, std::uint32_t n) {
    Mask m;
    m.frames = t;
    m.tokens_per_frame = n;
    m.bits.assign(std::size_t{t} * n, 0);
    return m;
}

void validate(const TokenGrid& grid) {
    if (grid.frames == 0 || grid.tokens_per_frame == 0 || grid.dim == 0) {
        fail(Errc::malformed_input, "token grid dimensions must be positive");
    }
    if (grid.values.size() != grid.value_count()) {
        fail(Errc::malformed_input, "token grid value count does not match T*N*D");
    }
    for (float v : grid.values) {
        if (!std::isfinite(v)) fail(Errc::invalid_value, "token grid contains a non-finite value");
    }
}

void validate(const SurpriseGrid& grid) {
    if (grid.frames == 0 || grid.tokens_per_frame == 0 || grid.dim == 0) {
        fail(Errc::malformed_input, "surprise grid dimensions must be positive");
    }
    if (grid.values.size() != grid.token_count() * grid.channels()) {
        fail(Errc::malformed_input, "surprise grid value count does not match T*N*2D");
    }
    for (float v : grid.values) {
        if (!std::isfinite(v)) fail(Errc::invalid_value, "surprise grid contains a non-finite value");
    }
}

void validate(const Mask& mask) {
    if (mask.frames == 0 || mask.tokens_per_frame == 0) {
        fail(Errc::malformed_input, "mask dimensions must be positive");
    }
    if (mask.bits.size() != mask.size()) {
        fail(Errc::malformed_input, "mask bit count does not match T*N");
    }
    for (std::uint8_t b : mask.bits) {
        if (b > 1) fail(Errc::invalid_value, "mask contains a non-binary entry");
    }
}

TokenGrid compute_residual(const TokenGrid& x) {
    validate(x);
    TokenGrid out = x; // frame 0 keeps x[0] (virtual zero predecessor)
    const std::size_t stride = std::size_t{x.tokens_per_frame} * x.dim;
    for (std::uint32_t t = x.frames; t-- > 1;) {
        float* cur = out.frame(t);
        const float* prev = x.frame(t - 1);
        for (std::size_t j = 0; j < stride; ++j) cur[j] -= prev[j];
    }
    return out;
}

SurpriseGrid encode_state(const TokenGrid& x) {
    const TokenGrid dx = compute_residual(x);
    SurpriseGrid h;
    h.frames = x.frames;
    h.tokens_per_frame = x.tokens_per_frame;
    h.dim = x.dim;
    h.values.resize(x.value_count() * 2);
    const std::uint32_t d = x.dim;
    for (std::uint32_t t = 0; t < x.frames; ++t) {
        for (std::uint32_t i = 0; i < x.tokens_per_frame; ++i) {
            float* dst = h.token(t, i);
            std::memcpy(dst, x.token(t, i), d * sizeof(float));
            std::memcpy(dst + d, dx.token(t, i), d * sizeof(float));
        }
    }
    return h;
}

void write_token_grid(const TokenGrid& grid, const std::filesystem::path& path) {
    validate(grid);
    std::string header;
    header.append(kGridMagic, 4);
    put_u32le(header, kFormatVersion);
    put_u32le(header, grid.frames);
    put_u32le(header, grid.tokens_per_frame);
    put_u32le(header, grid.dim);

    std::string payload;
    payload.reserve(grid.values.size() * 4);
    for (float v : grid.values) put_u32le(payload, std::bit_cast<std::uint32_t>(v));

    FilePtr f = open_file(path, "wb", false);
    write_all(f.get(), header.data(), header.size(), path);
    write_all(f.get(), payload.data(), payload.size(), path);
    if (std::fflush(f.get()) != 0) fail(Errc::io_error, "flush failed: " + path.string());
}

TokenGrid read_token_grid(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb", true);
    unsigned char header[20];
    if (read_some(f.get(), header, sizeof(header)) != sizeof(header)) {
        fail(Errc::malformed_header, "file too short for header: " + path.string());
    }
    expect_header(header, kGridMagic, path);

    TokenGrid grid;
    grid.frames = get_u32le(header + 8);
    grid.tokens_per_frame = get_u32le(header + 12);
    grid.dim = get_u32le(header + 16);
    if (grid.frames == 0 || grid.tokens_per_frame == 0 || grid.dim == 0) {
        fail(Errc::malformed_header, "header dimensions must be positive: " + path.string());
    }
    const std::uint64_t count =
        std::uint64_t{grid.frames} * grid.tokens_per_frame * grid.dim;
    if (count > kMaxValues) {
        fail(Errc::malformed_header, "header dimensions exceed supported size: " + path.string());
    }

    std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 4);
    if (read_some(f.get(), raw.data(), raw.size()) != raw.size()) {
        fail(Errc::truncated_payload, "payload shorter than T*N*D*4 bytes: " + path.string());
    }
    if (!at_eof(f.get())) {
        fail(Errc::truncated_payload, "payload longer than T*N*D*4 bytes: " + path.string());
    }

    grid.values.resize(static_cast<std::size_t>(count));
    for (std::size_t j = 0; j < grid.values.size(); ++j) {
        grid.values[j] = std::bit_cast<float>(get_u32le(raw.data() + j * 4));
        if (!std::isfinite(grid.values[j])) {
            fail(Errc::invalid_value, "payload contains a non-finite value: " + path.string());
        }
    }
    return grid;
}

void write_mask(const Mask& mask, const std::filesystem::path& path) {
    validate(mask);
    std::string header;
    header.append(kMaskMagic, 4);
    put_u32le(header, kFormatVersion);
    put_u32le(header, mask.frames);
    put_u32le(header, mask.tokens_per_frame);

    FilePtr f = open_file(path, "wb", false);
    write_all(f.get(), header.data(), header.size(), path);
    write_all(f.get(), mask.bits.data(), mask.bits.size(), path);
    if (std::fflush(f.get()) != 0) fail(Errc::io_error, "flush failed: " + path.string());
}

Mask read_mask(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb", true);
    unsigned char header[16];
    if (read_some(f.get(), header, sizeof(header)) != sizeof(header)) {
        fail(Errc::malformed_header, "file too short for header: " + path.string());
    }
    expect_header(header, kMaskMagic, path);

    Mask mask;
    mask.frames = get_u32le(header + 8);
    mask.tokens_per_frame = get_u32le(header + 12);
    if (mask.frames == 0 || mask.tokens_per_frame == 0) {
        fail(Errc::malformed_header, "header dimensions must be positive: " + path.string());
    }
    const std::uint64_t count = std::uint64_t{mask.frames} * mask.tokens_per_frame;
    if (count > kMaxValues) {
        fail(Errc::malformed_header, "header dimensions exceed supported size: " + path.string());
    }

    mask.bits.resize(static_cast<std::size_t>(count));
    if (read_some(f.get(), mask.bits.data(), mask.bits.size()) != mask.bits.size()) {
        fail(Errc::truncated_payload, "payload shorter than T*N bytes: " + path.string());
    }
    if (!at_eof(f.get())) {
        fail(Errc::truncated_payload, "payload longer than T*N bytes: " + path.string());
    }
    for (std::uint8_t b : mask.bits) {
        if (b > 1) fail(Errc::invalid_value, "mask payload contains a non-binary byte: " + path.string());
    }
    return mask;
}

} // namespace tokengate
