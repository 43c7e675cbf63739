#include <cstdlib>
#include <string>
#include <vector>

#include "neutsflow/numerics/fft.hpp"
#include "neutsflow/numerics/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace neutsflow::numerics::kernels {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
    if (n <= 0) {
        n = omp_get_num_procs();
        if (const char* env = std::getenv("NEUTSFLOW_THREADS")) {
            const int cap = std::atoi(env);
            if (cap > 0) n = cap;
        }
    }
    omp_set_num_threads(n);
#else
    (void)n;
#endif
}

namespace parallel {

namespace {
// Index type for OpenMP loops.
using idx = long long;
} // namespace

void rfft_rows(const double* in, std::size_t rows, std::size_t n, Complex* out) {
    const RealFftPlan& plan = real_fft_plan(n);
#pragma omp parallel
    {
        std::vector<Complex> work(plan.work_size());
#pragma omp for schedule(static)
        for (idx r = 0; r < static_cast<idx>(rows); ++r)
            plan.forward(in + r * n, out + r * plan.bins(), work.data());
    }
}

void irfft_rows(const Complex* in, std::size_t rows, std::size_t n, double* out) {
    const RealFftPlan& plan = real_fft_plan(n);
#pragma omp parallel
    {
        std::vector<Complex> work(plan.work_size());
#pragma omp for schedule(static)
        for (idx r = 0; r < static_cast<idx>(rows); ++r)
            plan.inverse(in + r * plan.bins(), out + r * n, work.data());
    }
}

void linear_rows(const double* x, const double* w, const double* bias, const LinearDims& d, double* y) {
#pragma omp parallel for schedule(static)
    for (idx r = 0; r < static_cast<idx>(d.rows); ++r) {
        const double* xr = x + r * d.in;
        for (std::size_t o = 0; o < d.out; ++o) {
            const double* wo = w + o * d.in;
            double s = bias ? bias[o] : 0.0;
            for (std::size_t i = 0; i < d.in; ++i) s += xr[i] * wo[i];
            y[r * d.out + o] = s;
        }
    }
}

void linear_rows_grad_x(const double* gy, const double* w, const LinearDims& d, double* gx) {
#pragma omp parallel
    {
        std::vector<double> acc(d.in);
#pragma omp for schedule(static)
        for (idx r = 0; r < static_cast<idx>(d.rows); ++r) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t o = 0; o < d.out; ++o) {
                const double g = gy[r * d.out + o];
                const double* wo = w + o * d.in;
                for (std::size_t i = 0; i < d.in; ++i) acc[i] += g * wo[i];
            }
            double* gxr = gx + r * d.in;
            for (std::size_t i = 0; i < d.in; ++i) gxr[i] += acc[i];
        }
    }
}

void linear_rows_grad_w(const double* gy, const double* x, const LinearDims& d, double* gw, double* gbias) {
#pragma omp parallel
    {
        std::vector<double> acc(d.in);
#pragma omp for schedule(static)
        for (idx o = 0; o < static_cast<idx>(d.out); ++o) {
            std::fill(acc.begin(), acc.end(), 0.0);
            double bsum = 0.0;
            for (std::size_t r = 0; r < d.rows; ++r) {
                const double g = gy[r * d.out + o];
                const double* xr = x + r * d.in;
                for (std::size_t i = 0; i < d.in; ++i) acc[i] += g * xr[i];
                bsum += g;
            }
            double* gwo = gw + o * d.in;
            for (std::size_t i = 0; i < d.in; ++i) gwo[i] += acc[i];
            if (gbias) gbias[o] += bsum;
        }
    }
}

void mix_features(const double* x, const double* p, const double* bias, const MixDims& d, double* y) {
#pragma omp parallel for collapse(2) schedule(static)
    for (idx b = 0; b < static_cast<idx>(d.batch); ++b)
        for (idx o = 0; o < static_cast<idx>(d.out); ++o) {
            double* yr = y + (b * d.out + o) * d.length;
            const double b0 = bias ? bias[o] : 0.0;
            for (std::size_t l = 0; l < d.length; ++l) yr[l] = b0;
            for (std::size_t f = 0; f < d.features; ++f) {
                const double c = p[o * d.features + f];
                const double* xr = x + (b * d.features + f) * d.length;
                for (std::size_t l = 0; l < d.length; ++l) yr[l] += c * xr[l];
            }
        }
}

void mix_features_grad_x(const double* gy, const double* p, const MixDims& d, double* gx) {
#pragma omp parallel
    {
        std::vector<double> acc(d.length);
#pragma omp for collapse(2) schedule(static)
        for (idx b = 0; b < static_cast<idx>(d.batch); ++b)
            for (idx f = 0; f < static_cast<idx>(d.features); ++f) {
                std::fill(acc.begin(), acc.end(), 0.0);
                for (std::size_t o = 0; o < d.out; ++o) {
                    const double c = p[o * d.features + f];
                    const double* gr = gy + (b * d.out + o) * d.length;
                    for (std::size_t l = 0; l < d.length; ++l) acc[l] += c * gr[l];
                }
                double* gxr = gx + (b * d.features + f) * d.length;
                for (std::size_t l = 0; l < d.length; ++l) gxr[l] += acc[l];
            }
    }
}

void mix_features_grad_p(const double* gy, const double* x, const MixDims& d, double* gp, double* gbias) {
#pragma omp parallel for collapse(2) schedule(static)
    for (idx o = 0; o < static_cast<idx>(d.out); ++o)
        for (idx f = 0; f < static_cast<idx>(d.features); ++f) {
            double s = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b) {
                const double* gr = gy + (b * d.out + o) * d.length;
                const double* xr = x + (b * d.features + f) * d.length;
                for (std::size_t l = 0; l < d.length; ++l) s += gr[l] * xr[l];
            }
            gp[o * d.features + f] += s;
        }
    if (gbias) {
        for (std::size_t o = 0; o < d.out; ++o) {
            double s = 0.0;
            for (std::size_t b = 0; b < d.batch; ++b) {
                const double* gr = gy + (b * d.out + o) * d.length;
                for (std::size_t l = 0; l < d.length; ++l) s += gr[l];
            }
            gbias[o] += s;
        }
    }
}

void complex_contract(const Complex* x, const Complex* w, const ContractDims& d, Complex* y) {
#pragma omp parallel for schedule(static)
    for (idx b = 0; b < static_cast<idx>(d.batch); ++b)
        for (std::size_t o = 0; o < d.k_out; ++o)
            for (std::size_t m = 0; m < d.modes; ++m) {
                Complex s{0.0, 0.0};
                for (std::size_t i = 0; i < d.k_in; ++i)
                    s += x[(b * d.k_in + i) * d.modes + m] * w[(i * d.k_out + o) * d.modes + m];
                y[(b * d.k_out + o) * d.modes + m] = s;
            }
}

void complex_contract_grad_x(const Complex* gy, const Complex* w, const ContractDims& d, Complex* gx) {
#pragma omp parallel
    {
        std::vector<Complex> acc(d.modes);
#pragma omp for schedule(static)
        for (idx b = 0; b < static_cast<idx>(d.batch); ++b)
            for (std::size_t i = 0; i < d.k_in; ++i) {
                std::fill(acc.begin(), acc.end(), Complex{0.0, 0.0});
                for (std::size_t o = 0; o < d.k_out; ++o) {
                    const Complex* gr = gy + (b * d.k_out + o) * d.modes;
                    const Complex* wr = w + (i * d.k_out + o) * d.modes;
                    for (std::size_t m = 0; m < d.modes; ++m) acc[m] += gr[m] * std::conj(wr[m]);
                }
                Complex* gxr = gx + (b * d.k_in + i) * d.modes;
                for (std::size_t m = 0; m < d.modes; ++m) gxr[m] += acc[m];
            }
    }
}

void complex_contract_grad_w(const Complex* gy, const Complex* x, const ContractDims& d, Complex* gw) {
#pragma omp parallel
    {
        std::vector<Complex> acc(d.modes);
#pragma omp for collapse(2) schedule(static)
        for (idx i = 0; i < static_cast<idx>(d.k_in); ++i)
            for (idx o = 0; o < static_cast<idx>(d.k_out); ++o) {
                std::fill(acc.begin(), acc.end(), Complex{0.0, 0.0});
                for (std::size_t b = 0; b < d.batch; ++b) {
                    const Complex* gr = gy + (b * d.k_out + o) * d.modes;
                    const Complex* xr = x + (b * d.k_in + i) * d.modes;
                    for (std::size_t m = 0; m < d.modes; ++m) acc[m] += gr[m] * std::conj(xr[m]);
                }
                Complex* gwr = gw + (i * d.k_out + o) * d.modes;
                for (std::size_t m = 0; m < d.modes; ++m) gwr[m] += acc[m];
            }
    }
}

} // namespace parallel
} // namespace neutsflow::numerics::kernels
