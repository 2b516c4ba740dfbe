#include "tokengate/cost_model.hpp"

#include <json.hpp>

#include "tokengate/error.hpp"

namespace tokengate {

double CostModel::linear_coeff() const {
    const double d = static_cast<double>(width);
    // Per layer, per token: 4 projections at 2*d^2 FLOPs each, plus two
    // feed-forward matmuls at 2*d*(f*d) FLOPs each.
    return static_cast<double>(layers) * (8.0 * d * d + 4.0 * ffn_expansion * d * d);
}

double CostModel::quadratic_coeff() const {
    const double d = static_cast<double>(width);
    // Per layer, per (query, key) pair: QK^T and attention*V, 2*d FLOPs each.
    return static_cast<double>(layers) * 4.0 * d;
}

CostModel CostModel::checked(std::uint32_t layers, std::uint32_t width, double ffn_expansion) {
    if (layers == 0 || width == 0 || !(ffn_expansion > 0.0)) {
        fail(Errc::config_error, "cost model needs layers >= 1, width >= 1, expansion > 0");
    }
    return CostModel{layers, width, ffn_expansion};
}

double prefill_cost(const CostModel& model, std::uint64_t seq_len) {
    if (seq_len == 0) fail(Errc::invalid_argument, "sequence length must be >= 1");
    const double len = static_cast<double>(seq_len);
    return model.linear_coeff() * len + model.quadratic_coeff() * len * len;
}

double speedup(const CostModel& model, std::uint64_t full_len, std::uint64_t comp_len) {
    return prefill_cost(model, full_len) / prefill_cost(model, comp_len);
}

std::string cost_report_json(const CostModel& model, std::uint64_t full_len,
                             std::uint64_t comp_len) {
    nlohmann::json report = {
        {"layers", model.layers},
        {"width", model.width},
        {"ffn_expansion", model.ffn_expansion},
        {"linear_coeff_flops_per_token", model.linear_coeff()},
        {"quadratic_coeff_flops_per_pair", model.quadratic_coeff()},
        {"full_tokens", full_len},
        {"comp_tokens", comp_len},
        {"cost_full_flops", prefill_cost(model, full_len)},
        {"cost_comp_flops", prefill_cost(model, comp_len)},
        {"speedup", speedup(model, full_len, comp_len)},
        {"reference",
         {{"note", "measured prefill speedup used as external reference point"},
          {"full_tokens", kReferenceFullTokens},
          {"comp_tokens", kReferenceCompTokens},
          {"measured_speedup", kReferenceMeasuredSpeedup}}},
    };
    return report.dump(2);
}

} // namespace tokengate
