#pragma once

// Hot loops of the velocity-field model. Every kernel exists twice:
//   reference::  plain serial loops, the ground truth for tests;
//   parallel::   OpenMP version, used by the library.
// Both compute each output element with the same summation order, so their
// results are bit-identical regardless of the thread count.
//
// Gradient kernels accumulate (+=) into their outputs.

#include <cstddef>

#include "neutsflow/numerics/tensor.hpp"

namespace neutsflow::numerics::kernels {

/// y[r, o] = bias[o] + sum_i x[r, i] * w[o, i]
struct LinearDims {
    std::size_t rows = 0;
    std::size_t in = 0;
    std::size_t out = 0;
};

/// y[b, o, l] = bias[o] + sum_f p[o, f] * x[b, f, l]
struct MixDims {
    std::size_t batch = 0;
    std::size_t features = 0;
    std::size_t out = 0;
    std::size_t length = 0;
};

/// y[b, o, m] = sum_i x[b, i, m] * w[i, o, m]   (complex)
struct ContractDims {
    std::size_t batch = 0;
    std::size_t k_in = 0;
    std::size_t k_out = 0;
    std::size_t modes = 0;
};

#define NEUTSFLOW_KERNEL_DECLS                                                                         \
    void rfft_rows(const double* in, std::size_t rows, std::size_t n, Complex* out);                   \
    void irfft_rows(const Complex* in, std::size_t rows, std::size_t n, double* out);                  \
    void linear_rows(const double* x, const double* w, const double* bias, const LinearDims& d,        \
                     double* y);                                                                       \
    void linear_rows_grad_x(const double* gy, const double* w, const LinearDims& d, double* gx);       \
    void linear_rows_grad_w(const double* gy, const double* x, const LinearDims& d, double* gw,        \
                            double* gbias);                                                            \
    void mix_features(const double* x, const double* p, const double* bias, const MixDims& d,          \
                      double* y);                                                                      \
    void mix_features_grad_x(const double* gy, const double* p, const MixDims& d, double* gx);         \
    void mix_features_grad_p(const double* gy, const double* x, const MixDims& d, double* gp,          \
                             double* gbias);                                                           \
    void complex_contract(const Complex* x, const Complex* w, const ContractDims& d, Complex* y);      \
    void complex_contract_grad_x(const Complex* gy, const Complex* w, const ContractDims& d,           \
                                 Complex* gx);                                                         \
    void complex_contract_grad_w(const Complex* gy, const Complex* x, const ContractDims& d,           \
                                 Complex* gw);

namespace reference {
NEUTSFLOW_KERNEL_DECLS
} // namespace reference

namespace parallel {
NEUTSFLOW_KERNEL_DECLS
} // namespace parallel

#undef NEUTSFLOW_KERNEL_DECLS

/// Threads the parallel kernels may use (honours NEUTSFLOW_THREADS).
int max_threads();
/// Caps the OpenMP thread count; n <= 0 restores the default.
void set_max_threads(int n);

} // namespace neutsflow::numerics::kernels
