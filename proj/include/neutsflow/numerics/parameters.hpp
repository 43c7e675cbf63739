#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::numerics {

/// Ordered collection of named real and complex tensors.
///
/// Doubles as the gradient record: a gradient is a ParameterSet congruent with
/// the parameters it differentiates. Complex tensors expose their storage as
/// interleaved (re, im) doubles through flat().
class ParameterSet {
public:
    using Value = std::variant<RealTensor, ComplexTensor>;

    void add(std::string name, RealTensor tensor);
    void add(std::string name, ComplexTensor tensor);

    std::size_t size() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_.at(i).name; }
    bool is_complex(std::size_t i) const { return std::holds_alternative<ComplexTensor>(entries_.at(i).value); }
    const Shape& shape(std::size_t i) const;
    const Value& value(std::size_t i) const { return entries_.at(i).value; }
    Value& value(std::size_t i) { return entries_.at(i).value; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }

    const RealTensor& real(std::string_view name) const;
    RealTensor& real(std::string_view name);
    const ComplexTensor& complex(std::string_view name) const;
    ComplexTensor& complex(std::string_view name);

    std::span<double> flat(std::size_t i);
    std::span<const double> flat(std::size_t i) const;

    /// Total number of real scalars (complex entries count twice).
    std::size_t scalar_count() const;

    ParameterSet zeros_like() const;
    /// Same names, kinds and shapes in the same order.
    bool congruent(const ParameterSet& other) const;

    bool operator==(const ParameterSet& other) const;

private:
    struct Entry {
        std::string name;
        Value value;
    };
    std::vector<Entry> entries_;
};

using GradientRecord = ParameterSet;

} // namespace neutsflow::numerics
