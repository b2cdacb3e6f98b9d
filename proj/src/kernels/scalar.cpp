#include "locus/kernels.hpp"

namespace locus::kernels::scalar {

double dot(const double* x, const double* y, std::size_t n) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double subspace_energy(const std::complex<double>* u, std::size_t m, std::size_t cols,
                       const std::complex<double>* a) noexcept {
    double energy = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const std::complex<double>* col = u + j * m;
        double re = 0.0;
        double im = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            // conj(u) * a
            re += col[i].real() * a[i].real() + col[i].imag() * a[i].imag();
            im += col[i].real() * a[i].imag() - col[i].imag() * a[i].real();
        }
        energy += re * re + im * im;
    }
    return energy;
}

}  // namespace locus::kernels::scalar
