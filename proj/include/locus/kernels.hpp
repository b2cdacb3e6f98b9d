#pragma once

// Inner-loop arithmetic shared by the MUSIC spectrum and the neural layers.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2/FMA variant. The variant is picked once at first use from CPUID and can
// be pinned with LOCUS_ISA=scalar|avx2 or force_isa(). Vector variants may
// differ from the reference by reassociation roundoff only.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace locus::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

/// The ISA the dispatched entry points currently route to.
Isa active_isa() noexcept;

/// True when the running CPU and the build both support `isa`.
bool isa_available(Isa isa) noexcept;

/// Pins dispatch to `isa`. Returns false (and leaves dispatch unchanged) if
/// the ISA is unavailable.
bool force_isa(Isa isa) noexcept;

/// sum_i x[i] * y[i]
double dot(std::span<const double> x, std::span<const double> y) noexcept;

/// y[i] += a * x[i]
void axpy(double a, std::span<const double> x, std::span<double> y) noexcept;

/// out[r] = bias[r] + dot(W row r, x) for a row-major rows x x.size() matrix.
void gemv(std::span<const double> w, std::span<const double> x, std::span<const double> bias,
          std::span<double> out) noexcept;

/// sum_j |u_j^H a|^2 over the `cols` columns u_j of a column-major m x cols
/// complex matrix. With u = noise subspace and a = steering vector this is the
/// MUSIC spectrum denominator.
double subspace_energy(std::span<const std::complex<double>> u, std::size_t cols,
                       std::span<const std::complex<double>> a) noexcept;

// Direct entry points, used by the equivalence tests.
namespace scalar {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double subspace_energy(const std::complex<double>* u, std::size_t m, std::size_t cols,
                       const std::complex<double>* a) noexcept;
}  // namespace scalar

namespace avx2 {
double dot(const double* x, const double* y, std::size_t n) noexcept;
void axpy(double a, const double* x, double* y, std::size_t n) noexcept;
double subspace_energy(const std::complex<double>* u, std::size_t m, std::size_t cols,
                       const std::complex<double>* a) noexcept;
}  // namespace avx2

}  // namespace locus::kernels
