#include <vector>

#include "neutsflow/numerics/fft.hpp"
#include "neutsflow/numerics/kernels.hpp"

namespace neutsflow::numerics::kernels::reference {

void rfft_rows(const double* in, std::size_t rows, std::size_t n, Complex* out) {
    const RealFftPlan& plan = real_fft_plan(n);
    std::vector<Complex> work(plan.work_size());
    for (std::size_t r = 0; r < rows; ++r) plan.forward(in + r * n, out + r * plan.bins(), work.data());
}

void irfft_rows(const Complex* in, std::size_t rows, std::size_t n, double* out) {
    const RealFftPlan& plan = real_fft_plan(n);
    std::vector<Complex> work(plan.work_size());
    for (std::size_t r = 0; r < rows; ++r) plan.inverse(in + r * plan.bins(), out + r * n, work.data());
}

void linear_rows(const double* x, const double* w, const double* bias, const LinearDims& d, double* y) {
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t o = 0; o < d.out; ++o) {
            double s = bias ? bias[o] : 0.0;
            for (std::size_t i = 0; i < d.in; ++i) s += x[r * d.in + i] * w[o * d.in + i];
            y[r * d.out + o] = s;
        }
}

void linear_rows_grad_x(const double* gy, const double* w, const LinearDims& d, double* gx) {
    for (std::size_t r = 0; r < d.rows; ++r)
        for (std::size_t i = 0; i < d.in; ++i) {
            double s = 0.0;
            for (std::size_t o = 0; o < d.out; ++o) s += gy[r * d.out + o] * w[o * d.in + i];
            gx[r * d.in + i] += s;
        }
}

void linear_rows_grad_w(const double* gy, const double* x, const LinearDims& d, double* gw, double* gbias) {
    for (std::size_t o = 0; o < d.out; ++o) {
        for (std::size_t i = 0; i < d.in; ++i) {
            double s = 0.0;
            for (std::size_t r = 0; r < d.rows; ++r) s += gy[r * d.out + o] * x[r * d.in + i];
            gw[o * d.in + i] += s;
        }
        if (gbias) {
            double s = 0.0;
            for (std::size_t r = 0; r < d.rows; ++r) s += gy[r * d.out + o];
            gbias[o] += s;
        }
    }
}

void mix_features(const double* x, const double* p, const double* bias, const MixDims& d, double* y) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.out; ++o)
            for (std::size_t l = 0; l < d.length; ++l) {
                double s = bias ? bias[o] : 0.0;
                for (std::size_t f = 0; f < d.features; ++f)
                    s += p[o * d.features + f] * x[(b * d.features + f) * d.length + l];
                y[(b * d.out + o) * d.length + l] = s;
            }
}

void mix_features_grad_x(const double* gy, const double* p, const MixDims& d, double* gx) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t f = 0; f < d.features; ++f)
            for (std::size_t l = 0; l < d.length; ++l) {
                double s = 0.0;
                for (std::size_t o = 0; o < d.out; ++o)
                    s += p[o * d.features + f] * gy[(b * d.out + o) * d.length + l];
                gx[(b * d.features + f) * d.length + l] += s;
            }
}

void mix_features_grad_p(const double* gy, const double* x, const MixDims& d, double* gp, double* gbias) {
    for (std::size_t o = 0; o < d.out; ++o) {
        for (std::size_t f = 0; f < d.features; ++f) {
            double s = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b)
                for (std::size_t l = 0; l < d.length; ++l)
                    s += gy[(b * d.out + o) * d.length + l] * x[(b * d.features + f) * d.length + l];
            gp[o * d.features + f] += s;
        }
        if (gbias) {
            double s = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b)
                for (std::size_t l = 0; l < d.length; ++l) s += gy[(b * d.out + o) * d.length + l];
            gbias[o] += s;
        }
    }
}

void complex_contract(const Complex* x, const Complex* w, const ContractDims& d, Complex* y) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t o = 0; o < d.k_out; ++o)
            for (std::size_t m = 0; m < d.modes; ++m) {
                Complex s{0.0, 0.0};
                for (std::size_t i = 0; i < d.k_in; ++i)
                    s += x[(b * d.k_in + i) * d.modes + m] * w[(i * d.k_out + o) * d.modes + m];
                y[(b * d.k_out + o) * d.modes + m] = s;
            }
}

void complex_contract_grad_x(const Complex* gy, const Complex* w, const ContractDims& d, Complex* gx) {
    for (std::size_t b = 0; b < d.batch; ++b)
        for (std::size_t i = 0; i < d.k_in; ++i)
            for (std::size_t m = 0; m < d.modes; ++m) {
                Complex s{0.0, 0.0};
                for (std::size_t o = 0; o < d.k_out; ++o)
                    s += gy[(b * d.k_out + o) * d.modes + m] * std::conj(w[(i * d.k_out + o) * d.modes + m]);
                gx[(b * d.k_in + i) * d.modes + m] += s;
            }
}

void complex_contract_grad_w(const Complex* gy, const Complex* x, const ContractDims& d, Complex* gw) {
    for (std::size_t i = 0; i < d.k_in; ++i)
        for (std::size_t o = 0; o < d.k_out; ++o)
            for (std::size_t m = 0; m < d.modes; ++m) {
                Complex s{0.0, 0.0};
                for (std::size_t b = 0; b < d.batch; ++b)
                    s += gy[(b * d.k_out + o) * d.modes + m] * std::conj(x[(b * d.k_in + i) * d.modes + m]);
                gw[(i * d.k_out + o) * d.modes + m] += s;
            }
}

} // namespace neutsflow::numerics::kernels::reference
