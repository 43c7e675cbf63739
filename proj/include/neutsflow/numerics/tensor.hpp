#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "neutsflow/error.hpp"

namespace neutsflow::numerics {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

inline std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << ']';
    return os.str();
}

/// Dense row-major array of doubles or complex doubles.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(numel(shape_), T{}) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (numel(shape_) != data_.size())
            throw UsageError("tensor: shape " + shape_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
    }
    Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(numel(shape_), fill) {}

    static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const {
        if (axis >= shape_.size())
            throw UsageError("tensor: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_string(shape_));
        return shape_[axis];
    }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    std::vector<T>& storage() { return data_; }
    const std::vector<T>& storage() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    template <class... I>
    T& at(I... idx) { return data_[offset({static_cast<std::size_t>(idx)...})]; }
    template <class... I>
    const T& at(I... idx) const { return data_[offset({static_cast<std::size_t>(idx)...})]; }

    /// Same values, new shape with identical element count.
    Tensor reshaped(Shape shape) const {
        if (numel(shape) != data_.size())
            throw UsageError("tensor: cannot reshape " + shape_string(shape_) + " to " +
                             shape_string(shape));
        return Tensor(std::move(shape), data_);
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Tensor& other) const = default;

private:
    std::size_t offset(std::initializer_list<std::size_t> idx) const {
        if (idx.size() != shape_.size())
            throw UsageError("tensor: index rank " + std::to_string(idx.size()) +
                             " does not match shape " + shape_string(shape_));
        std::size_t off = 0;
        std::size_t axis = 0;
        for (auto i : idx) {
            if (i >= shape_[axis])
                throw UsageError("tensor: index out of range for shape " + shape_string(shape_));
            off = off * shape_[axis] + i;
            ++axis;
        }
        return off;
    }

    Shape shape_;
    std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b)
        throw UsageError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
}

/// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
    std::size_t outer = 1;
    std::size_t length = 1;
    std::size_t inner = 1;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis) {
    if (axis >= shape.size())
        throw UsageError("axis " + std::to_string(axis) + " invalid for shape " + shape_string(shape));
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.length = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

/// Swaps the last two axes.
template <class T>
Tensor<T> transpose_last2(const Tensor<T>& x) {
    if (x.rank() < 2) throw UsageError("transpose_last2: rank < 2");
    Shape out_shape = x.shape();
    const std::size_t r = x.rank();
    const std::size_t rows = out_shape[r - 2];
    const std::size_t cols = out_shape[r - 1];
    std::swap(out_shape[r - 2], out_shape[r - 1]);
    Tensor<T> out(out_shape);
    const std::size_t batch = x.size() / (rows * cols);
    for (std::size_t b = 0; b < batch; ++b) {
        const T* src = x.data() + b * rows * cols;
        T* dst = out.data() + b * rows * cols;
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
    }
    return out;
}

/// Maximum absolute element-wise difference.
double max_abs_diff(const RealTensor& a, const RealTensor& b);
double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b);

bool all_finite(const RealTensor& x);

} // namespace neutsflow::numerics
