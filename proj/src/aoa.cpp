#include "locus/aoa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "locus/kernels.hpp"

namespace locus {

namespace {

using cd = std::complex<double>;

double off_diagonal_norm2(const Eigen::MatrixXcd& a) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i)
            if (i != j) s += std::norm(a(i, j));
    return s;
}

// Zeroes a(p,q) with the unitary U = D * G, where D rotates the phase of
// column q so a(p,q) becomes real and G is a real Jacobi rotation.
void jacobi_rotate(Eigen::MatrixXcd& a, Eigen::MatrixXcd& v, Eigen::Index p, Eigen::Index q) {
    const cd apq = a(p, q);
    const double mag = std::abs(apq);
    if (mag == 0.0) return;
    const cd phase = std::conj(apq) / mag;  // d_q, so that apq * d_q = |apq|

    const double app = a(p, p).real();
    const double aqq = a(q, q).real();
    const double tau = (aqq - app) / (2.0 * mag);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;

    // U restricted to (p,q): [[c, s], [-s d_q, c d_q]].
    const cd upp = c;
    const cd upq = s;
    const cd uqp = -s * phase;
    const cd uqq = c * phase;

    const Eigen::Index n = a.rows();
    for (Eigen::Index k = 0; k < n; ++k) {  // A <- A U
        const cd akp = a(k, p);
        const cd akq = a(k, q);
        a(k, p) = akp * upp + akq * uqp;
        a(k, q) = akp * upq + akq * uqq;
    }
    for (Eigen::Index k = 0; k < n; ++k) {  // A <- U^H A
        const cd apk = a(p, k);
        const cd aqk = a(q, k);
        a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
        a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = a(p, p).real();
    a(q, q) = a(q, q).real();
    for (Eigen::Index k = 0; k < n; ++k) {  // V <- V U
        const cd vkp = v(k, p);
        const cd vkq = v(k, q);
        v(k, p) = vkp * upp + vkq * uqp;
        v(k, q) = vkp * upq + vkq * uqq;
    }
}

}  // namespace

std::vector<double> AngleGrid::points() const {
    if (!(step_deg > 0.0)) throw std::invalid_argument("angle grid step must be > 0");
    if (!(start_deg >= -90.0) || !(stop_deg <= 90.0) || !(start_deg <= stop_deg))
        throw std::invalid_argument("angle grid must lie within [-90, 90] degrees");
    const auto n = static_cast<std::size_t>(std::floor((stop_deg - start_deg) / step_deg + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = start_deg + step_deg * static_cast<double>(i);
    return out;
}

CorrelationMatrix correlation_matrix(const SnapshotMatrix& x) {
    if (x.data.cols() == 0 || x.data.rows() == 0)
        throw std::invalid_argument("empty snapshot matrix");
    const auto t = static_cast<double>(x.data.cols());
    Eigen::MatrixXcd r = (x.data * x.data.adjoint()) / t;
    Eigen::MatrixXcd sym = 0.5 * (r + r.adjoint());
    return {std::move(sym)};
}

EigenDecomposition eigendecompose(const CorrelationMatrix& r) {
    const Eigen::Index n = r.r.rows();
    if (n == 0 || r.r.cols() != n) throw std::invalid_argument("correlation matrix must be square");
    for (Eigen::Index k = 0; k < r.r.size(); ++k)
        if (!std::isfinite(r.r(k).real()) || !std::isfinite(r.r(k).imag()))
            throw std::invalid_argument("correlation matrix has non-finite entries");

    Eigen::MatrixXcd a = 0.5 * (r.r + r.r.adjoint());
    Eigen::MatrixXcd v = Eigen::MatrixXcd::Identity(n, n);
    const double total = a.squaredNorm();
    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_diagonal_norm2(a) <= 1e-30 * total) break;
        for (Eigen::Index p = 0; p < n - 1; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) jacobi_rotate(a, v, p, q);
    }

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
        return a(i, i).real() > a(j, j).real();
    });

    EigenDecomposition out{Eigen::VectorXd(n), Eigen::MatrixXcd(n, n)};
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        out.values[k] = a(src, src).real();
        Eigen::VectorXcd col = v.col(src);
        Eigen::Index big = 0;
        for (Eigen::Index i = 1; i < n; ++i)
            if (std::abs(col[i]) > std::abs(col[big]) * (1.0 + 1e-12)) big = i;
        col *= std::conj(col[big]) / std::abs(col[big]);
        col.normalize();
        out.vectors.col(k) = col;
    }
    return out;
}

Eigen::MatrixXcd noise_subspace(const EigenDecomposition& e, int k) {
    const auto m = e.vectors.cols();
    if (k < 1 || k >= m) throw std::invalid_argument("source count must satisfy 1 <= k < M");
    return e.vectors.rightCols(m - k);
}

SpatialSpectrum spatial_spectrum(const Eigen::MatrixXcd& un, const ArraySpec& array,
                                 const AngleGrid& grid) {
    if (un.rows() != array.m) throw std::invalid_argument("noise subspace does not match array");
    SpatialSpectrum out;
    out.grid_deg = grid.points();
    if (out.grid_deg.empty()) throw std::invalid_argument("empty angle grid");
    out.power.resize(out.grid_deg.size());
    const std::span<const cd> u(un.data(), static_cast<std::size_t>(un.size()));
    for (std::size_t i = 0; i < out.grid_deg.size(); ++i) {
        const Eigen::VectorXcd a = steering_vector(array, out.grid_deg[i]);
        const double denom = kernels::subspace_energy(
            u, static_cast<std::size_t>(un.cols()), {a.data(), static_cast<std::size_t>(a.size())});
        out.power[i] = 1.0 / std::max(denom, 1e-15);
    }
    return out;
}

namespace {

std::vector<std::size_t> local_maxima(const std::vector<double>& p) {
    std::vector<std::size_t> peaks;
    const std::size_t n = p.size();
    if (n == 1) return {0};
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || p[i] > p[i - 1];
        const bool right = i + 1 == n || p[i] >= p[i + 1];
        if (left && right) peaks.push_back(i);
    }
    return peaks;
}

double refine(const SpatialSpectrum& s, std::size_t i) {
    const std::size_t n = s.power.size();
    if (i == 0 || i + 1 >= n) return s.grid_deg[i];
    const double l = 10.0 * std::log10(s.power[i - 1]);
    const double c = 10.0 * std::log10(s.power[i]);
    const double r = 10.0 * std::log10(s.power[i + 1]);
    const double curvature = l - 2.0 * c + r;
    if (!(curvature < 0.0)) return s.grid_deg[i];
    const double delta = std::clamp(0.5 * (l - r) / curvature, -0.5, 0.5);
    return s.grid_deg[i] + delta * (s.grid_deg[i + 1] - s.grid_deg[i]);
}

}  // namespace

std::size_t count_peaks(const SpatialSpectrum& spectrum) {
    std::size_t count = 0;
    for (std::size_t i = 1; i + 1 < spectrum.power.size(); ++i)
        if (spectrum.power[i] > spectrum.power[i - 1] && spectrum.power[i] > spectrum.power[i + 1])
            ++count;
    return count;
}

std::vector<double> pick_peaks(const SpatialSpectrum& spectrum, int k) {
    if (k < 1) throw std::invalid_argument("need k >= 1 peaks");
    std::vector<std::size_t> peaks = local_maxima(spectrum.power);
    if (peaks.size() < static_cast<std::size_t>(k))
        throw std::runtime_error("spectrum has fewer local maxima than requested sources");
    // Indices ascend with angle, so a stable sort keeps the lower angle on ties.
    std::stable_sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) {
        return spectrum.power[a] > spectrum.power[b];
    });
    std::vector<double> angles;
    for (int j = 0; j < k; ++j) angles.push_back(refine(spectrum, peaks[static_cast<std::size_t>(j)]));
    std::sort(angles.begin(), angles.end());
    return angles;
}

std::vector<double> estimate_aoa(const SnapshotMatrix& x, int k, double grid_step_deg) {
    x.array.validate();
    if (k < 1 || k >= x.array.m) throw std::invalid_argument("source count must satisfy 1 <= k < M");
    const EigenDecomposition e = eigendecompose(correlation_matrix(x));
    const SpatialSpectrum s =
        spatial_spectrum(noise_subspace(e, k), x.array, AngleGrid{-90.0, 90.0, grid_step_deg});
    return pick_peaks(s, k);
}

}  // namespace locus
