// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include "locus/kernels.hpp"

namespace locus::kernels::avx2 {

namespace {

inline double hsum(__m256d v) noexcept {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* x, const double* y, std::size_t n) noexcept {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i,
                         _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

// Complex values are interleaved (re, im). A 256-bit lane holds two of them.
double subspace_energy(const std::complex<double>* u, std::size_t m, std::size_t cols,
                       const std::complex<double>* a) noexcept {
    const auto* ap = reinterpret_cast<const double*>(a);
    double energy = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const auto* up = reinterpret_cast<const double*>(u + j * m);
        // acc_rr accumulates (ur*ar, ui*ai) pairs, acc_x accumulates (ur*ai, ui*ar).
        __m256d acc_rr = _mm256_setzero_pd();
        __m256d acc_x = _mm256_setzero_pd();
        std::size_t i = 0;
        for (; i + 2 <= m; i += 2) {
            const __m256d vu = _mm256_loadu_pd(up + 2 * i);
            const __m256d va = _mm256_loadu_pd(ap + 2 * i);
            acc_rr = _mm256_fmadd_pd(vu, va, acc_rr);
            acc_x = _mm256_fmadd_pd(vu, _mm256_permute_pd(va, 0b0101), acc_x);
        }
        alignas(32) double rr[4];
        alignas(32) double xx[4];
        _mm256_store_pd(rr, acc_rr);
        _mm256_store_pd(xx, acc_x);
        double re = (rr[0] + rr[2]) + (rr[1] + rr[3]);
        double im = (xx[0] + xx[2]) - (xx[1] + xx[3]);
        for (; i < m; ++i) {
            re += u[j * m + i].real() * a[i].real() + u[j * m + i].imag() * a[i].imag();
            im += u[j * m + i].real() * a[i].imag() - u[j * m + i].imag() * a[i].real();
        }
        energy += re * re + im * im;
    }
    return energy;
}

}  // namespace locus::kernels::avx2
