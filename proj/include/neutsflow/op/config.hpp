#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace neutsflow::op {

/// Sizes fixed at construction. M = min(m_max, floor(L/2) + 1).
struct OperatorDims {
    std::size_t S = 96;
    std::size_t L = 96;
    std::size_t C = 7;
    std::size_t k = 16;
    std::size_t K = 5;
    std::size_t m_max = 32;
    std::size_t hidden = 128;
    double eps_norm = 1e-5;

    std::size_t modes() const;
    /// Channels entering the spectral layer: G, the embedding and t.
    std::size_t lifted_channels() const { return 2 * C + 1; }
    void validate() const;
};

enum class Variant { full, wo_neural_operator, wo_flow_matching, wo_normalization, wo_spectral_decomposition };

Variant parse_variant(std::string_view text);
std::string to_string(Variant v);
const std::vector<Variant>& all_variants();

/// Structural switches derived from the variant.
struct Architecture {
    bool normalize = true;
    bool decompose = true;
    /// Per-branch linear S -> L maps instead of the spectral operator.
    bool linear_head = false;

    static Architecture for_variant(Variant v);
};

struct ModelConfig {
    OperatorDims dims;
    Variant variant = Variant::full;

    Architecture arch() const { return Architecture::for_variant(variant); }
    /// "trend", "season" when decomposing, otherwise the single branch "series".
    std::vector<std::string> branches() const;
    void validate() const { dims.validate(); }

    std::vector<std::pair<std::string, std::string>> to_pairs() const;
    static ModelConfig from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);
};

} // namespace neutsflow::op
