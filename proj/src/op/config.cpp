#include "neutsflow/op/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "neutsflow/error.hpp"

namespace neutsflow::op {

std::size_t OperatorDims::modes() const { return std::min(m_max, L / 2 + 1); }

void OperatorDims::validate() const {
    if (S < 2) throw UsageError("operator: S must be >= 2");
    if (L < 1 || C < 1 || k < 1 || hidden < 1 || m_max < 1) throw UsageError("operator: L, C, k, hidden, m_max must be >= 1");
    if (K < 1 || K > S / 2 + 1)
        throw UsageError("operator: K=" + std::to_string(K) + " outside [1, " + std::to_string(S / 2 + 1) + "]");
    if (!(eps_norm > 0.0)) throw UsageError("operator: eps_norm must be > 0");
}

Variant parse_variant(std::string_view text) {
    for (Variant v : all_variants())
        if (to_string(v) == text) return v;
    throw UsageError("unknown variant '" + std::string(text) +
                     "' (expected full, wo_neural_operator, wo_flow_matching, wo_normalization or "
                     "wo_spectral_decomposition)");
}

std::string to_string(Variant v) {
    switch (v) {
    case Variant::full: return "full";
    case Variant::wo_neural_operator: return "wo_neural_operator";
    case Variant::wo_flow_matching: return "wo_flow_matching";
    case Variant::wo_normalization: return "wo_normalization";
    case Variant::wo_spectral_decomposition: return "wo_spectral_decomposition";
    }
    return "?";
}

const std::vector<Variant>& all_variants() {
    static const std::vector<Variant> v{Variant::full, Variant::wo_neural_operator, Variant::wo_flow_matching,
                                        Variant::wo_normalization, Variant::wo_spectral_decomposition};
    return v;
}

Architecture Architecture::for_variant(Variant v) {
    Architecture a;
    a.normalize = v != Variant::wo_normalization;
    a.decompose = v != Variant::wo_spectral_decomposition;
    a.linear_head = v == Variant::wo_neural_operator;
    return a;
}

std::vector<std::string> ModelConfig::branches() const {
    if (arch().decompose) return {"trend", "season"};
    return {"series"};
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t to_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw UsageError("config: bad integer for " + key + ": " + v);
    return out;
}

} // namespace

std::vector<std::pair<std::string, std::string>> ModelConfig::to_pairs() const {
    return {{"S", std::to_string(dims.S)},
            {"L", std::to_string(dims.L)},
            {"C", std::to_string(dims.C)},
            {"k", std::to_string(dims.k)},
            {"K", std::to_string(dims.K)},
            {"m_max", std::to_string(dims.m_max)},
            {"hidden", std::to_string(dims.hidden)},
            {"eps_norm", fmt_double(dims.eps_norm)},
            {"variant", to_string(variant)}};
}

ModelConfig ModelConfig::from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
    ModelConfig c;
    for (const auto& [k, v] : pairs) {
        if (k == "S") c.dims.S = to_size(k, v);
        else if (k == "L") c.dims.L = to_size(k, v);
        else if (k == "C") c.dims.C = to_size(k, v);
        else if (k == "k") c.dims.k = to_size(k, v);
        else if (k == "K") c.dims.K = to_size(k, v);
        else if (k == "m_max") c.dims.m_max = to_size(k, v);
        else if (k == "hidden") c.dims.hidden = to_size(k, v);
        else if (k == "eps_norm") c.dims.eps_norm = std::stod(v);
        else if (k == "variant") c.variant = parse_variant(v);
        else throw UsageError("config: unknown model key '" + k + "'");
    }
    return c;
}

} // namespace neutsflow::op
