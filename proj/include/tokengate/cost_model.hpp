#pragma once

#include <cstdint>
#include <string>

namespace tokengate {

// Analytic prefill-FLOP model for a decoder-style transformer:
//   cost(L) = a*L + b*L^2
// with a the per-token linear work (QKV/output projections plus the
// feed-forward block) and b the per-pair attention work, both summed over
// layers. Multiply-accumulate counts as two FLOPs.
struct CostModel {
    std::uint32_t layers = 28;
    std::uint32_t width = 3584;     // model hidden size d
    double ffn_expansion = 5.3;     // feed-forward inner size / d

    double linear_coeff() const;    // a, FLOPs per token
    double quadratic_coeff() const; // b, FLOPs per token pair

    static CostModel checked(std::uint32_t layers, std::uint32_t width, double ffn_expansion);
};

// a*L + b*L^2 for a sequence of length L.
double prefill_cost(const CostModel& model, std::uint64_t seq_len);

// cost(full) / cost(compressed); > 1 whenever comp < full.
double speedup(const CostModel& model, std::uint64_t full_len, std::uint64_t comp_len);

// Human/machine-readable report for one (full, comp) pair, including the
// externally measured 16.2x reference at 42657 -> 4439 total tokens that the
// analytic bracket is compared against.
std::string cost_report_json(const CostModel& model, std::uint64_t full_len,
                             std::uint64_t comp_len);

// Reference operating point for the measured speedup.
inline constexpr std::uint64_t kReferenceFullTokens = 42657;
inline constexpr std::uint64_t kReferenceCompTokens = 4439;
inline constexpr double kReferenceMeasuredSpeedup = 16.2;

} // namespace tokengate
