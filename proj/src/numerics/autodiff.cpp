#include "neutsflow/numerics/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "neutsflow/numerics/kernels.hpp"

namespace neutsflow::numerics {

namespace {

bool has(Var v) { return v.id != kNoNode; }

constexpr double kInvSqrt2 = 0.70710678118654752440;

} // namespace

std::size_t Tape::push(RealTensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), std::monostate{}, requires_grad, std::move(backward)});
    return nodes_.size() - 1;
}

std::size_t Tape::push(ComplexTensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), std::monostate{}, requires_grad, std::move(backward)});
    return nodes_.size() - 1;
}

const Tape::Node& Tape::node(std::size_t id) const {
    if (id >= nodes_.size()) throw UsageError("tape: unknown node " + std::to_string(id));
    return nodes_[id];
}

Tape::Node& Tape::node(std::size_t id) {
    if (id >= nodes_.size()) throw UsageError("tape: unknown node " + std::to_string(id));
    return nodes_[id];
}

const RealTensor& Tape::value(Var v) const {
    const auto* t = std::get_if<RealTensor>(&node(v.id).value);
    if (!t) throw UsageError("tape: node " + std::to_string(v.id) + " is not real");
    return *t;
}

const ComplexTensor& Tape::value(CVar v) const {
    const auto* t = std::get_if<ComplexTensor>(&node(v.id).value);
    if (!t) throw UsageError("tape: node " + std::to_string(v.id) + " is not complex");
    return *t;
}

RealTensor Tape::grad(Var v) const {
    const Node& n = node(v.id);
    if (const auto* g = std::get_if<RealTensor>(&n.grad)) return *g;
    return RealTensor(value(v).shape());
}

ComplexTensor Tape::grad(CVar v) const {
    const Node& n = node(v.id);
    if (const auto* g = std::get_if<ComplexTensor>(&n.grad)) return *g;
    return ComplexTensor(value(v).shape());
}

RealTensor& Tape::grad_buffer(Var v) {
    Node& n = node(v.id);
    if (std::holds_alternative<std::monostate>(n.grad)) n.grad = RealTensor(value(v).shape());
    return std::get<RealTensor>(n.grad);
}

ComplexTensor& Tape::grad_buffer(CVar v) {
    Node& n = node(v.id);
    if (std::holds_alternative<std::monostate>(n.grad)) n.grad = ComplexTensor(value(v).shape());
    return std::get<ComplexTensor>(n.grad);
}

const RealTensor& Tape::upstream(std::size_t self) const { return std::get<RealTensor>(node(self).grad); }

const ComplexTensor& Tape::upstream_complex(std::size_t self) const {
    return std::get<ComplexTensor>(node(self).grad);
}

void Tape::backward(Var loss) {
    const RealTensor& l = value(loss);
    if (l.size() != 1)
        throw UsageError("backward: loss must be a scalar, got shape " + shape_string(l.shape()));
    for (auto& n : nodes_) n.grad = std::monostate{};
    grad_buffer(loss)[0] = 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.backward || std::holds_alternative<std::monostate>(n.grad)) continue;
        n.backward(*this, id);
    }
}

namespace ad {

namespace {

void check_same(const Tape& tape, Var a, Var b, const char* op) {
    require_same_shape(tape.value(a).shape(), tape.value(b).shape(), op);
}

} // namespace

Var add(Tape& tape, Var a, Var b) {
    check_same(tape, a, b, "add");
    RealTensor out = tape.value(a);
    const RealTensor& bv = tape.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return Var{tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        for (Var in : {a, b}) {
            if (!t.requires_grad(in)) continue;
            RealTensor& gi = t.grad_buffer(in);
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
    })};
}

Var sub(Tape& tape, Var a, Var b) {
    check_same(tape, a, b, "sub");
    RealTensor out = tape.value(a);
    const RealTensor& bv = tape.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return Var{tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        if (t.requires_grad(a)) {
            RealTensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.requires_grad(b)) {
            RealTensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    })};
}

Var mul(Tape& tape, Var a, Var b) {
    check_same(tape, a, b, "mul");
    RealTensor out = tape.value(a);
    const RealTensor& bv = tape.value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const bool rg = tape.requires_grad(a) || tape.requires_grad(b);
    return Var{tape.push(std::move(out), rg, [a, b](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        if (t.requires_grad(a)) {
            const RealTensor& bv = t.value(b);
            RealTensor& ga = t.grad_buffer(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.requires_grad(b)) {
            const RealTensor& av = t.value(a);
            RealTensor& gb = t.grad_buffer(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    })};
}

Var scale(Tape& tape, Var a, double s) {
    RealTensor out = tape.value(a);
    for (auto& v : out.values()) v *= s;
    return Var{tape.push(std::move(out), tape.requires_grad(a), [a, s](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        RealTensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
    })};
}

Var add_constant(Tape& tape, Var a, const RealTensor& c) {
    require_same_shape(tape.value(a).shape(), c.shape(), "add_constant");
    RealTensor out = tape.value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
    return Var{tape.push(std::move(out), tape.requires_grad(a), [a](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        RealTensor& ga = t.grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    })};
}

Var sum(Tape& tape, Var a) {
    double s = 0.0;
    for (double v : tape.value(a).values()) s += v;
    return Var{tape.push(RealTensor::scalar(s), tape.requires_grad(a), [a](Tape& t, std::size_t self) {
        const double g = t.upstream(self)[0];
        RealTensor& ga = t.grad_buffer(a);
        for (auto& v : ga.values()) v += g;
    })};
}

Var mse(Tape& tape, Var prediction, const RealTensor& target) {
    const RealTensor& p = tape.value(prediction);
    require_same_shape(p.shape(), target.shape(), "mse");
    if (p.empty()) throw UsageError("mse: empty tensors");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - target[i];
        s += d * d;
    }
    const double n = static_cast<double>(p.size());
    return Var{tape.push(RealTensor::scalar(s / n), tape.requires_grad(prediction),
                         [prediction, target, n](Tape& t, std::size_t self) {
                             const double g = t.upstream(self)[0];
                             const RealTensor& pv = t.value(prediction);
                             RealTensor& gp = t.grad_buffer(prediction);
                             const double c = 2.0 * g / n;
                             for (std::size_t i = 0; i < pv.size(); ++i) gp[i] += c * (pv[i] - target[i]);
                         })};
}

Var gelu(Tape& tape, Var a) {
    RealTensor out = tape.value(a);
    for (auto& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    return Var{tape.push(std::move(out), tape.requires_grad(a), [a](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        const RealTensor& x = t.value(a);
        RealTensor& ga = t.grad_buffer(a);
        constexpr double inv_sqrt_2pi = 0.3989422804014327;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
            ga[i] += g[i] * (cdf + x[i] * pdf);
        }
    })};
}

Var linear(Tape& tape, Var x, Var w, Var bias) {
    const RealTensor& xv = tape.value(x);
    const RealTensor& wv = tape.value(w);
    if (wv.rank() != 2 || xv.rank() < 1 || xv.shape().back() != wv.dim(1))
        throw UsageError("linear: input " + shape_string(xv.shape()) + " incompatible with weight " +
                         shape_string(wv.shape()));
    kernels::LinearDims d{xv.size() / wv.dim(1), wv.dim(1), wv.dim(0)};
    const double* bptr = nullptr;
    if (has(bias)) {
        const RealTensor& bv = tape.value(bias);
        if (bv.size() != d.out) throw UsageError("linear: bias length does not match output width");
        bptr = bv.data();
    }
    Shape out_shape = xv.shape();
    out_shape.back() = d.out;
    RealTensor out(out_shape);
    kernels::parallel::linear_rows(xv.data(), wv.data(), bptr, d, out.data());
    const bool rg = tape.requires_grad(x) || tape.requires_grad(w) || (has(bias) && tape.requires_grad(bias));
    return Var{tape.push(std::move(out), rg, [x, w, bias, d](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        if (t.requires_grad(x))
            kernels::parallel::linear_rows_grad_x(g.data(), t.value(w).data(), d, t.grad_buffer(x).data());
        const bool gb = has(bias) && t.requires_grad(bias);
        if (t.requires_grad(w)) {
            kernels::parallel::linear_rows_grad_w(g.data(), t.value(x).data(), d, t.grad_buffer(w).data(),
                                                  gb ? t.grad_buffer(bias).data() : nullptr);
        } else if (gb) {
            double* gbias = t.grad_buffer(bias).data();
            for (std::size_t o = 0; o < d.out; ++o) {
                double s = 0.0;
                for (std::size_t r = 0; r < d.rows; ++r) s += g[r * d.out + o];
                gbias[o] += s;
            }
        }
    })};
}

namespace {

std::size_t row_length_for(const RealTensor& x, std::size_t rows, const char* op) {
    if (rows == 0 || x.size() % rows != 0 || x.rank() < 1 || x.size() / rows != x.shape().back())
        throw UsageError(std::string(op) + ": " + std::to_string(rows) + " row statistics do not fit shape " +
                         shape_string(x.shape()));
    return x.shape().back();
}

} // namespace

Var normalize_rows(Tape& tape, Var x, std::span<const double> shift, std::span<const double> scale) {
    const RealTensor& xv = tape.value(x);
    if (shift.size() != scale.size()) throw UsageError("normalize_rows: shift/scale length mismatch");
    const std::size_t n = row_length_for(xv, shift.size(), "normalize_rows");
    RealTensor out = xv;
    for (std::size_t r = 0; r < shift.size(); ++r)
        for (std::size_t l = 0; l < n; ++l) out[r * n + l] = (out[r * n + l] - shift[r]) / scale[r];
    std::vector<double> sc(scale.begin(), scale.end());
    return Var{tape.push(std::move(out), tape.requires_grad(x), [x, sc, n](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        RealTensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < sc.size(); ++r)
            for (std::size_t l = 0; l < n; ++l) gx[r * n + l] += g[r * n + l] / sc[r];
    })};
}

Var denormalize_rows(Tape& tape, Var x, std::span<const double> shift, std::span<const double> scale) {
    const RealTensor& xv = tape.value(x);
    if (shift.size() != scale.size()) throw UsageError("denormalize_rows: shift/scale length mismatch");
    const std::size_t n = row_length_for(xv, shift.size(), "denormalize_rows");
    RealTensor out = xv;
    for (std::size_t r = 0; r < shift.size(); ++r)
        for (std::size_t l = 0; l < n; ++l) out[r * n + l] = out[r * n + l] * scale[r] + shift[r];
    std::vector<double> sc(scale.begin(), scale.end());
    return Var{tape.push(std::move(out), tape.requires_grad(x), [x, sc, n](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        RealTensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < sc.size(); ++r)
            for (std::size_t l = 0; l < n; ++l) gx[r * n + l] += g[r * n + l] * sc[r];
    })};
}

Var concat(Tape& tape, std::span<const Var> parts, std::size_t axis) {
    if (parts.empty()) throw UsageError("concat: no inputs");
    const Shape& first = tape.value(parts[0]).shape();
    if (axis >= first.size()) throw UsageError("concat: axis out of range");
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> extents;
    bool rg = false;
    for (Var p : parts) {
        const Shape& s = tape.value(p).shape();
        if (s.size() != first.size()) throw UsageError("concat: rank mismatch");
        for (std::size_t i = 0; i < s.size(); ++i)
            if (i != axis && s[i] != first[i])
                throw UsageError("concat: extent mismatch " + shape_string(s) + " vs " + shape_string(first));
        extents.push_back(s[axis]);
        out_shape[axis] += s[axis];
        rg = rg || tape.requires_grad(p);
    }
    const AxisSplit split = split_axis(out_shape, axis);
    RealTensor out(out_shape);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const RealTensor& pv = tape.value(parts[k]);
        const std::size_t block = extents[k] * split.inner;
        for (std::size_t o = 0; o < split.outer; ++o)
            std::copy_n(pv.data() + o * block, block, out.data() + (o * split.length + offset) * split.inner);
        offset += extents[k];
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return Var{tape.push(std::move(out), rg, [inputs, extents, split](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const std::size_t block = extents[k] * split.inner;
            if (t.requires_grad(inputs[k])) {
                RealTensor& gi = t.grad_buffer(inputs[k]);
                for (std::size_t o = 0; o < split.outer; ++o) {
                    const double* src = g.data() + (o * split.length + offset) * split.inner;
                    double* dst = gi.data() + o * block;
                    for (std::size_t i = 0; i < block; ++i) dst[i] += src[i];
                }
            }
            offset += extents[k];
        }
    })};
}

Var expand_outer(Tape& tape, Var z0, Var w) {
    const RealTensor& zv = tape.value(z0);
    const RealTensor& wv = tape.value(w);
    if (wv.rank() != 2 || wv.dim(0) != 1) throw UsageError("expand_outer: weight must be 1 x k");
    if (zv.rank() < 1) throw UsageError("expand_outer: input must have a time axis");
    const std::size_t k = wv.dim(1);
    const std::size_t len = zv.shape().back();
    const std::size_t rows = zv.size() / len;
    Shape out_shape = zv.shape();
    out_shape.insert(out_shape.end() - 1, k);
    RealTensor out(out_shape);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < k; ++j) {
            const double c = wv[j];
            const double* src = zv.data() + r * len;
            double* dst = out.data() + (r * k + j) * len;
            for (std::size_t l = 0; l < len; ++l) dst[l] = src[l] * c;
        }
    const bool rg = tape.requires_grad(z0) || tape.requires_grad(w);
    return Var{tape.push(std::move(out), rg, [z0, w, k, len, rows](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        if (t.requires_grad(z0)) {
            const RealTensor& wv = t.value(w);
            RealTensor& gz = t.grad_buffer(z0);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t l = 0; l < len; ++l) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < k; ++j) s += g[(r * k + j) * len + l] * wv[j];
                    gz[r * len + l] += s;
                }
        }
        if (t.requires_grad(w)) {
            const RealTensor& zv = t.value(z0);
            RealTensor& gw = t.grad_buffer(w);
            for (std::size_t j = 0; j < k; ++j) {
                double s = 0.0;
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t l = 0; l < len; ++l) s += g[(r * k + j) * len + l] * zv[r * len + l];
                gw[j] += s;
            }
        }
    })};
}

Var mix_features(Tape& tape, Var x, Var p, Var bias) {
    const RealTensor& xv = tape.value(x);
    const RealTensor& pv = tape.value(p);
    if (xv.rank() < 3) throw UsageError("mix_features: input must be [B, ..., L]");
    kernels::MixDims d;
    d.batch = xv.dim(0);
    d.length = xv.shape().back();
    d.features = xv.size() / (d.batch * d.length);
    if (pv.rank() != 2 || pv.dim(1) != d.features)
        throw UsageError("mix_features: projection " + shape_string(pv.shape()) + " does not take " +
                         std::to_string(d.features) + " features");
    d.out = pv.dim(0);
    const double* bptr = nullptr;
    if (has(bias)) {
        if (tape.value(bias).size() != d.out) throw UsageError("mix_features: bias length mismatch");
        bptr = tape.value(bias).data();
    }
    RealTensor out(Shape{d.batch, d.out, d.length});
    kernels::parallel::mix_features(xv.data(), pv.data(), bptr, d, out.data());
    const bool rg = tape.requires_grad(x) || tape.requires_grad(p) || (has(bias) && tape.requires_grad(bias));
    return Var{tape.push(std::move(out), rg, [x, p, bias, d](Tape& t, std::size_t self) {
        const RealTensor& g = t.upstream(self);
        if (t.requires_grad(x))
            kernels::parallel::mix_features_grad_x(g.data(), t.value(p).data(), d, t.grad_buffer(x).data());
        const bool gb = has(bias) && t.requires_grad(bias);
        if (t.requires_grad(p)) {
            kernels::parallel::mix_features_grad_p(g.data(), t.value(x).data(), d, t.grad_buffer(p).data(),
                                                   gb ? t.grad_buffer(bias).data() : nullptr);
        } else if (gb) {
            double* gbias = t.grad_buffer(bias).data();
            for (std::size_t o = 0; o < d.out; ++o) {
                double s = 0.0;
                for (std::size_t b = 0; b < d.batch; ++b)
                    for (std::size_t l = 0; l < d.length; ++l) s += g[(b * d.out + o) * d.length + l];
                gbias[o] += s;
            }
        }
    })};
}

CVar rfft_last(Tape& tape, Var x) {
    const RealTensor& xv = tape.value(x);
    if (xv.rank() < 1 || xv.shape().back() == 0) throw UsageError("rfft_last: empty time axis");
    const std::size_t n = xv.shape().back();
    const std::size_t bins = n / 2 + 1;
    const std::size_t rows = xv.size() / n;
    Shape out_shape = xv.shape();
    out_shape.back() = bins;
    ComplexTensor out(out_shape);
    kernels::parallel::rfft_rows(xv.data(), rows, n, out.data());
    return CVar{tape.push(std::move(out), tape.requires_grad(x), [x, n, bins, rows](Tape& t, std::size_t self) {
        // dL/dx[n] = Re(sum_m G[m] exp(+2 pi i m n / L)) = L * irfft(G'), where G' halves the
        // bins that irfft counts twice.
        ComplexTensor g = t.upstream_complex(self);
        const std::size_t last_full = (n % 2 == 0) ? bins - 1 : bins;
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t m = 1; m < last_full; ++m) g[r * bins + m] *= 0.5;
        std::vector<double> tmp(rows * n);
        kernels::parallel::irfft_rows(g.data(), rows, n, tmp.data());
        RealTensor& gx = t.grad_buffer(x);
        const double scale = static_cast<double>(n);
        for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i] * scale;
    })};
}

Var irfft_last(Tape& tape, CVar spectrum, std::size_t n) {
    const ComplexTensor& sv = tape.value(spectrum);
    if (n == 0) throw UsageError("irfft_last: n must be >= 1");
    const std::size_t bins = n / 2 + 1;
    if (sv.rank() < 1 || sv.shape().back() != bins)
        throw UsageError("irfft_last: spectrum length " + std::to_string(sv.rank() ? sv.shape().back() : 0) +
                         " does not match n/2+1 = " + std::to_string(bins));
    const std::size_t rows = sv.size() / bins;
    Shape out_shape = sv.shape();
    out_shape.back() = n;
    RealTensor out(out_shape);
    kernels::parallel::irfft_rows(sv.data(), rows, n, out.data());
    return Var{tape.push(std::move(out), tape.requires_grad(spectrum),
                         [spectrum, n, bins, rows](Tape& t, std::size_t self) {
                             // dL/dY[m] = (c_m / L) * rfft(g)[m], c_m = 1 at DC/Nyquist, else 2.
                             const RealTensor& g = t.upstream(self);
                             std::vector<Complex> tmp(rows * bins);
                             kernels::parallel::rfft_rows(g.data(), rows, n, tmp.data());
                             ComplexTensor& gs = t.grad_buffer(spectrum);
                             const double inv = 1.0 / static_cast<double>(n);
                             for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t m = 0; m < bins; ++m) {
                                     const bool single = m == 0 || (n % 2 == 0 && m == bins - 1);
                                     gs[r * bins + m] += tmp[r * bins + m] * ((single ? 1.0 : 2.0) * inv);
                                 }
                         })};
}

CVar slice_last(Tape& tape, CVar x, std::size_t count) {
    const ComplexTensor& xv = tape.value(x);
    if (xv.rank() < 1 || count > xv.shape().back())
        throw UsageError("slice_last: cannot keep " + std::to_string(count) + " of shape " + shape_string(xv.shape()));
    const std::size_t len = xv.shape().back();
    const std::size_t rows = xv.size() / len;
    Shape out_shape = xv.shape();
    out_shape.back() = count;
    ComplexTensor out(out_shape);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * len, count, out.data() + r * count);
    return CVar{tape.push(std::move(out), tape.requires_grad(x), [x, len, rows, count](Tape& t, std::size_t self) {
        const ComplexTensor& g = t.upstream_complex(self);
        ComplexTensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t m = 0; m < count; ++m) gx[r * len + m] += g[r * count + m];
    })};
}

CVar pad_last(Tape& tape, CVar x, std::size_t length) {
    const ComplexTensor& xv = tape.value(x);
    if (xv.rank() < 1 || length < xv.shape().back())
        throw UsageError("pad_last: target length shorter than input");
    const std::size_t len = xv.shape().back();
    const std::size_t rows = xv.size() / len;
    Shape out_shape = xv.shape();
    out_shape.back() = length;
    ComplexTensor out(out_shape);
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv.data() + r * len, len, out.data() + r * length);
    return CVar{tape.push(std::move(out), tape.requires_grad(x), [x, len, rows, length](Tape& t, std::size_t self) {
        const ComplexTensor& g = t.upstream_complex(self);
        ComplexTensor& gx = t.grad_buffer(x);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t m = 0; m < len; ++m) gx[r * len + m] += g[r * length + m];
    })};
}

CVar complex_contract(Tape& tape, CVar x, CVar w) {
    const ComplexTensor& xv = tape.value(x);
    const ComplexTensor& wv = tape.value(w);
    if (xv.rank() != 4 || wv.rank() != 3 || xv.dim(2) != wv.dim(0) || xv.dim(3) != wv.dim(2))
        throw UsageError("complex_contract: X " + shape_string(xv.shape()) + " incompatible with W " +
                         shape_string(wv.shape()));
    kernels::ContractDims d{xv.dim(0) * xv.dim(1), wv.dim(0), wv.dim(1), wv.dim(2)};
    ComplexTensor out(Shape{xv.dim(0), xv.dim(1), d.k_out, d.modes});
    kernels::parallel::complex_contract(xv.data(), wv.data(), d, out.data());
    const bool rg = tape.requires_grad(x) || tape.requires_grad(w);
    return CVar{tape.push(std::move(out), rg, [x, w, d](Tape& t, std::size_t self) {
        const ComplexTensor& g = t.upstream_complex(self);
        if (t.requires_grad(x))
            kernels::parallel::complex_contract_grad_x(g.data(), t.value(w).data(), d, t.grad_buffer(x).data());
        if (t.requires_grad(w))
            kernels::parallel::complex_contract_grad_w(g.data(), t.value(x).data(), d, t.grad_buffer(w).data());
    })};
}

} // namespace ad

} // namespace neutsflow::numerics
