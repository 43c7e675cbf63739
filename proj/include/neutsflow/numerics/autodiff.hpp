#pragma once

// Reverse-mode differentiation over a fixed vocabulary of tensor operations.
//
// A Tape records every value produced in evaluation order; backward() walks the
// records in reverse and calls each node's adjoint. Complex nodes carry the
// gradient of the real loss as dL/dRe + i dL/dIm.

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::numerics {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

/// Handle to a real-valued node.
struct Var {
    std::size_t id = kNoNode;
};

/// Handle to a complex-valued node.
struct CVar {
    std::size_t id = kNoNode;
};

class Tape {
public:
    using Backward = std::function<void(Tape&, std::size_t self)>;

    Var constant(RealTensor value) { return Var{push(std::move(value), false, {})}; }
    Var variable(RealTensor value) { return Var{push(std::move(value), true, {})}; }
    CVar constant(ComplexTensor value) { return CVar{push(std::move(value), false, {})}; }
    CVar variable(ComplexTensor value) { return CVar{push(std::move(value), true, {})}; }

    const RealTensor& value(Var v) const;
    const ComplexTensor& value(CVar v) const;
    bool requires_grad(Var v) const { return node(v.id).requires_grad; }
    bool requires_grad(CVar v) const { return node(v.id).requires_grad; }

    /// Accumulated gradient; zeros when the node received none.
    RealTensor grad(Var v) const;
    ComplexTensor grad(CVar v) const;

    /// Reverse sweep from a scalar (single-element) node.
    void backward(Var loss);

    std::size_t size() const { return nodes_.size(); }

    // Interface for operation implementations.
    std::size_t push(RealTensor value, bool requires_grad, Backward backward);
    std::size_t push(ComplexTensor value, bool requires_grad, Backward backward);
    RealTensor& grad_buffer(Var v);
    ComplexTensor& grad_buffer(CVar v);
    const RealTensor& upstream(std::size_t self) const;
    const ComplexTensor& upstream_complex(std::size_t self) const;

private:
    struct Node {
        std::variant<RealTensor, ComplexTensor> value;
        std::variant<std::monostate, RealTensor, ComplexTensor> grad;
        bool requires_grad = false;
        Backward backward;
    };

    const Node& node(std::size_t id) const;
    Node& node(std::size_t id);

    std::vector<Node> nodes_;
};

/// Differentiable operations. Shapes follow a time-last layout: series live on the last axis.
namespace ad {

Var add(Tape& tape, Var a, Var b);
Var sub(Tape& tape, Var a, Var b);
/// Element-wise product.
Var mul(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var a, double s);
Var add_constant(Tape& tape, Var a, const RealTensor& c);
Var sum(Tape& tape, Var a);
/// Mean of squared differences against a constant target; scalar output.
Var mse(Tape& tape, Var prediction, const RealTensor& target);
/// GELU with the exact Gaussian CDF.
Var gelu(Tape& tape, Var a);

/// y[..., o] = bias[o] + sum_i x[..., i] * w[o, i]. `bias` may be omitted (id == kNoNode).
Var linear(Tape& tape, Var x, Var w, Var bias = {});

/// Rows are all leading axes; row r of x (last axis) becomes (x - shift[r]) / scale[r].
Var normalize_rows(Tape& tape, Var x, std::span<const double> shift, std::span<const double> scale);
/// Inverse map: x * scale[r] + shift[r].
Var denormalize_rows(Tape& tape, Var x, std::span<const double> shift, std::span<const double> scale);

/// Concatenation along `axis`; all other extents must agree.
Var concat(Tape& tape, std::span<const Var> parts, std::size_t axis);

/// [B, F, L] x [1, k] -> [B, F, k, L], z1[b, f, j, l] = z0[b, f, l] * w[0, j].
Var expand_outer(Tape& tape, Var z0, Var w);

/// x [B, ..., L] with F = product of middle extents; y[b, o, l] = bias[o] + sum_f p[o, f] x[b, f, l].
Var mix_features(Tape& tape, Var x, Var p, Var bias = {});

CVar rfft_last(Tape& tape, Var x);
Var irfft_last(Tape& tape, CVar spectrum, std::size_t n);
/// Keeps the first `count` entries of the last axis.
CVar slice_last(Tape& tape, CVar x, std::size_t count);
/// Zero-pads the last axis to `length`.
CVar pad_last(Tape& tape, CVar x, std::size_t length);

/// X [B, c, k_in, M] with W [k_in, k_out, M] -> [B, c, k_out, M].
CVar complex_contract(Tape& tape, CVar x, CVar w);

} // namespace ad

} // namespace neutsflow::numerics
