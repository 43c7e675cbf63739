#include "neutsflow/numerics/parameters.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace neutsflow::numerics {

void ParameterSet::add(std::string name, RealTensor tensor) {
    if (contains(name)) throw UsageError("parameters: duplicate name '" + name + "'");
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

void ParameterSet::add(std::string name, ComplexTensor tensor) {
    if (contains(name)) throw UsageError("parameters: duplicate name '" + name + "'");
    entries_.push_back(Entry{std::move(name), std::move(tensor)});
}

const Shape& ParameterSet::shape(std::size_t i) const {
    return std::visit([](const auto& t) -> const Shape& { return t.shape(); }, entries_.at(i).value);
}

std::optional<std::size_t> ParameterSet::find(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    return std::nullopt;
}

std::size_t ParameterSet::index(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw UsageError("parameters: no tensor named '" + std::string(name) + "'");
}

const RealTensor& ParameterSet::real(std::string_view name) const {
    const auto* t = std::get_if<RealTensor>(&entries_[index(name)].value);
    if (!t) throw UsageError("parameters: '" + std::string(name) + "' is complex");
    return *t;
}

RealTensor& ParameterSet::real(std::string_view name) {
    return const_cast<RealTensor&>(std::as_const(*this).real(name));
}

const ComplexTensor& ParameterSet::complex(std::string_view name) const {
    const auto* t = std::get_if<ComplexTensor>(&entries_[index(name)].value);
    if (!t) throw UsageError("parameters: '" + std::string(name) + "' is real");
    return *t;
}

ComplexTensor& ParameterSet::complex(std::string_view name) {
    return const_cast<ComplexTensor&>(std::as_const(*this).complex(name));
}

std::span<double> ParameterSet::flat(std::size_t i) {
    auto& v = entries_.at(i).value;
    if (auto* r = std::get_if<RealTensor>(&v)) return r->values();
    auto& c = std::get<ComplexTensor>(v);
    // std::complex<double> is layout-compatible with double[2].
    return {reinterpret_cast<double*>(c.data()), 2 * c.size()};
}

std::span<const double> ParameterSet::flat(std::size_t i) const {
    const auto& v = entries_.at(i).value;
    if (const auto* r = std::get_if<RealTensor>(&v)) return r->values();
    const auto& c = std::get<ComplexTensor>(v);
    return {reinterpret_cast<const double*>(c.data()), 2 * c.size()};
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += flat(i).size();
    return n;
}

ParameterSet ParameterSet::zeros_like() const {
    ParameterSet out;
    for (const auto& e : entries_)
        std::visit([&](const auto& t) { out.add(e.name, std::decay_t<decltype(t)>(t.shape())); }, e.value);
    return out;
}

bool ParameterSet::congruent(const ParameterSet& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (name(i) != other.name(i) || is_complex(i) != other.is_complex(i) || shape(i) != other.shape(i))
            return false;
    return true;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
    if (!congruent(other)) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        auto a = flat(i);
        auto b = other.flat(i);
        if (!std::equal(a.begin(), a.end(), b.begin())) return false;
    }
    return true;
}

} // namespace neutsflow::numerics
