#include <atomic>
#include <cstdlib>
#include <string_view>

#include "locus/kernels.hpp"

namespace locus::kernels {

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t) noexcept;
    void (*axpy)(double, const double*, double*, std::size_t) noexcept;
    double (*subspace_energy)(const std::complex<double>*, std::size_t, std::size_t,
                              const std::complex<double>*) noexcept;
};

constexpr Table kScalar{&scalar::dot, &scalar::axpy, &scalar::subspace_energy};
#if defined(LOCUS_HAVE_AVX2_KERNELS)
constexpr Table kAvx2{&avx2::dot, &avx2::axpy, &avx2::subspace_energy};
#endif

bool cpu_has_avx2() noexcept {
#if defined(LOCUS_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const Table* table_for(Isa isa) noexcept {
#if defined(LOCUS_HAVE_AVX2_KERNELS)
    if (isa == Isa::avx2) return &kAvx2;
#endif
    (void)isa;
    return &kScalar;
}

Isa initial_isa() noexcept {
    const char* env = std::getenv("LOCUS_ISA");
    if (env != nullptr && std::string_view(env) == "scalar") return Isa::scalar;
    return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

const Table& active() noexcept { return *table_for(current().load(std::memory_order_relaxed)); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool isa_available(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

bool force_isa(Isa isa) noexcept {
    if (!isa_available(isa)) return false;
    current().store(isa, std::memory_order_relaxed);
    return true;
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
    return active().dot(x.data(), y.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) noexcept {
    active().axpy(a, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> w, std::span<const double> x, std::span<const double> bias,
          std::span<double> out) noexcept {
    const Table& t = active();
    const std::size_t n = x.size();
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = bias[r] + t.dot(w.data() + r * n, x.data(), n);
}

double subspace_energy(std::span<const std::complex<double>> u, std::size_t cols,
                       std::span<const std::complex<double>> a) noexcept {
    return active().subspace_energy(u.data(), a.size(), cols, a.data());
}

}  // namespace locus::kernels
