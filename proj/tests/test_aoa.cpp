#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "locus/aoa.hpp"

using namespace locus;
using cd = std::complex<double>;

namespace {

constexpr double kNoNoise = -std::numeric_limits<double>::infinity();

Eigen::MatrixXcd random_hermitian(int m, Rng& rng) {
    Eigen::MatrixXcd a(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) a(i, j) = cd(standard_normal(rng), standard_normal(rng));
    return 0.5 * (a + a.adjoint());
}

SnapshotMatrix one_source(double theta, double snr_db, int m, int t, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<SourceSpec> src{{theta, 0.0}};
    return simulate_snapshots(ArraySpec{m, 0.5, t}, src, -snr_db, rng);
}

}  // namespace

TEST_SUITE("aoa") {

TEST_CASE("correlation of a single snapshot is its outer product") {
    SnapshotMatrix x{Eigen::MatrixXcd(3, 1), ArraySpec{3, 0.5, 1}};
    x.data << cd(1, 2), cd(-0.5, 0.25), cd(0, -1);
    const CorrelationMatrix r = correlation_matrix(x);
    CHECK((r.r - x.data * x.data.adjoint()).norm() < 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r.r);
    CHECK(std::abs(es.eigenvalues()[0]) < 1e-12);
    CHECK(std::abs(es.eigenvalues()[1]) < 1e-12);
}

TEST_CASE("correlation of white noise approaches the identity") {
    Rng rng(5);
    SnapshotMatrix x{Eigen::MatrixXcd(4, 100000), ArraySpec{4, 0.5, 100000}};
    const double s = std::sqrt(0.5);
    for (Eigen::Index k = 0; k < x.data.size(); ++k) x.data(k) = cd(s * standard_normal(rng), s * standard_normal(rng));
    const CorrelationMatrix r = correlation_matrix(x);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (i == j)
                CHECK(std::abs(r.r(i, j) - 1.0) < 0.02);
            else
                CHECK(std::abs(r.r(i, j)) < 0.02);
        }
    CHECK((r.r - r.r.adjoint()).norm() == 0.0);
}

TEST_CASE("real snapshots give a real symmetric correlation") {
    Rng rng(1);
    SnapshotMatrix x{Eigen::MatrixXcd(3, 20), ArraySpec{3, 0.5, 20}};
    for (Eigen::Index k = 0; k < x.data.size(); ++k) x.data(k) = cd(standard_normal(rng), 0.0);
    const CorrelationMatrix r = correlation_matrix(x);
    CHECK(r.r.imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("empty snapshot matrix is rejected") {
    SnapshotMatrix x{Eigen::MatrixXcd(3, 0), ArraySpec{3, 0.5, 1}};
    CHECK_THROWS(correlation_matrix(x));
}

TEST_CASE("eigendecomposition of simple matrices") {
    CorrelationMatrix id{Eigen::MatrixXcd::Identity(4, 4)};
    const EigenDecomposition e = eigendecompose(id);
    for (int i = 0; i < 4; ++i) CHECK(e.values[i] == doctest::Approx(1.0));

    CorrelationMatrix d{Eigen::MatrixXcd::Zero(2, 2)};
    d.r(0, 0) = 1.0;
    d.r(1, 1) = 3.0;
    const EigenDecomposition f = eigendecompose(d);
    CHECK(f.values[0] == doctest::Approx(3.0));
    CHECK(f.values[1] == doctest::Approx(1.0));
    CHECK(std::abs(std::abs(f.vectors(1, 0)) - 1.0) < 1e-12);
    CHECK(std::abs(std::abs(f.vectors(0, 1)) - 1.0) < 1e-12);

    CorrelationMatrix bad{Eigen::MatrixXcd::Identity(2, 2)};
    bad.r(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(eigendecompose(bad));
}

TEST_CASE("Jacobi agrees with a reference Hermitian solver") {
    Rng rng(33);
    for (int m : {2, 3, 5, 8, 12}) {
        for (int trial = 0; trial < 5; ++trial) {
            const CorrelationMatrix r{random_hermitian(m, rng)};
            const EigenDecomposition e = eigendecompose(r);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(r.r);
            for (int i = 0; i < m; ++i) CHECK(std::abs(e.values[i] - ref.eigenvalues()[m - 1 - i]) < 1e-10);
            for (int i = 1; i < m; ++i) CHECK(e.values[i - 1] >= e.values[i]);

            const Eigen::MatrixXcd rec = e.vectors * e.values.asDiagonal() * e.vectors.adjoint();
            CHECK((rec - r.r).norm() / r.r.norm() < 1e-10);
            CHECK((e.vectors.adjoint() * e.vectors - Eigen::MatrixXcd::Identity(m, m)).norm() < 1e-10);
            for (int i = 0; i < m; ++i)
                CHECK((r.r * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm() < 1e-8);
        }
    }
}

TEST_CASE("noise subspace selection") {
    CorrelationMatrix d{Eigen::MatrixXcd::Zero(2, 2)};
    d.r(0, 0) = 5.0;
    d.r(1, 1) = 2.0;
    const EigenDecomposition e = eigendecompose(d);
    const Eigen::MatrixXcd un = noise_subspace(e, 1);
    REQUIRE(un.cols() == 1);
    CHECK(std::abs(std::abs(un(1, 0)) - 1.0) < 1e-12);
    CHECK_THROWS(noise_subspace(e, 2));
    CHECK_THROWS(noise_subspace(e, 0));
}

TEST_CASE("noiseless data: noise subspace is orthogonal to the sources") {
    for (const std::vector<double>& thetas : {std::vector<double>{30.0}, std::vector<double>{-40.0, 10.0, 55.0}}) {
        const ArraySpec arr{8, 0.5, 200};
        std::vector<SourceSpec> src;
        for (double t : thetas) src.push_back({t, 0.0});
        Rng rng(8);
        const SnapshotMatrix x = simulate_snapshots(arr, src, kNoNoise, rng);
        const Eigen::MatrixXcd un = noise_subspace(eigendecompose(correlation_matrix(x)), static_cast<int>(thetas.size()));
        for (double t : thetas) CHECK((un.adjoint() * steering_vector(arr, t)).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("spectrum peaks where the source is") {
    const SnapshotMatrix x = one_source(0.0, std::numeric_limits<double>::infinity(), 8, 64, 2);
    const Eigen::MatrixXcd un = noise_subspace(eigendecompose(correlation_matrix(x)), 1);
    const SpatialSpectrum s = spatial_spectrum(un, x.array, AngleGrid{});
    REQUIRE(s.grid_deg.size() == 1801);
    std::size_t best = 0;
    for (std::size_t i = 0; i < s.power.size(); ++i) {
        CHECK(s.power[i] >= 0.0);
        if (s.power[i] > s.power[best]) best = i;
    }
    CHECK(std::abs(s.grid_deg[best]) < 1e-9);
    CHECK_THROWS(spatial_spectrum(un, x.array, AngleGrid{-90.0, 90.0, 0.0}));
    CHECK_THROWS(spatial_spectrum(un, x.array, AngleGrid{-100.0, 90.0, 1.0}));
}

TEST_CASE("MUSIC spectrum equals the direct quadratic form") {
    const SnapshotMatrix x = one_source(-22.0, 10.0, 6, 128, 3);
    const Eigen::MatrixXcd un = noise_subspace(eigendecompose(correlation_matrix(x)), 1);
    const SpatialSpectrum s = spatial_spectrum(un, x.array, AngleGrid{-90.0, 90.0, 0.5});
    for (std::size_t i = 0; i < s.grid_deg.size(); i += 7) {
        const Eigen::VectorXcd a = steering_vector(x.array, s.grid_deg[i]);
        const double denom = std::max((un.adjoint() * a).squaredNorm(), 1e-15);
        CHECK(s.power[i] == doctest::Approx(1.0 / denom).epsilon(1e-10));
    }
}

TEST_CASE("peak is stable under grid refinement") {
    const SnapshotMatrix x = one_source(17.3, 15.0, 8, 256, 4);
    const double coarse = estimate_aoa(x, 1, 1.0).front();
    const double fine = estimate_aoa(x, 1, 0.1).front();
    CHECK(std::abs(coarse - fine) < 1.0);
}

TEST_CASE("noiseless single source is recovered") {
    const SnapshotMatrix x = one_source(30.0, std::numeric_limits<double>::infinity(), 8, 64, 5);
    CHECK(std::abs(estimate_aoa(x, 1).front() - 30.0) < 0.1);
}

TEST_CASE("MUSIC RMSE at 20 dB stays under a degree") {
    double se = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const double e = estimate_aoa(one_source(30.0, 20.0, 8, 256, seed), 1).front() - 30.0;
        se += e * e;
    }
    CHECK(std::sqrt(se / 100.0) < 1.0);
}

TEST_CASE("two sources are both recovered") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const std::vector<SourceSpec> src{{-15.0, 0.0}, {20.0, 0.0}};
        const SnapshotMatrix x = simulate_snapshots(ArraySpec{8, 0.5, 256}, src, -20.0, rng);
        const auto est = estimate_aoa(x, 2);
        REQUIRE(est.size() == 2);
        CHECK(std::abs(est[0] + 15.0) < 2.0);
        CHECK(std::abs(est[1] - 20.0) < 2.0);
    }
}

TEST_CASE("scaling the snapshots leaves the estimate unchanged") {
    Rng rng(14);
    const std::vector<SourceSpec> src{{-33.0, 0.0}, {12.0, 0.0}};
    SnapshotMatrix x = simulate_snapshots(ArraySpec{8, 0.5, 256}, src, -15.0, rng);
    const auto a = estimate_aoa(x, 2);
    x.data *= cd(-2.5, 4.0);
    const auto b = estimate_aoa(x, 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-9);
}

TEST_CASE("separated sources show at least K peaks in 95% of runs") {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed);
        const std::vector<SourceSpec> src{{-40.0, 0.0}, {25.0, 0.0}};
        const SnapshotMatrix x = simulate_snapshots(ArraySpec{8, 0.5, 128}, src, -10.0, rng);
        const Eigen::MatrixXcd un = noise_subspace(eigendecompose(correlation_matrix(x)), 2);
        if (count_peaks(spatial_spectrum(un, x.array, AngleGrid{})) >= 2) ++ok;
    }
    CHECK(ok >= 95);
}

TEST_CASE("peak picking order and ties") {
    SpatialSpectrum s;
    s.grid_deg = {-2, -1, 0, 1, 2, 3, 4};
    s.power = {1, 5, 1, 2, 1, 5, 1};
    const auto two = pick_peaks(s, 2);
    REQUIRE(two.size() == 2);
    CHECK(two[0] == doctest::Approx(-1.0));
    CHECK(two[1] == doctest::Approx(3.0));
    const auto one = pick_peaks(s, 1);
    CHECK(one[0] == doctest::Approx(-1.0));
    CHECK(count_peaks(s) == 3);

    SpatialSpectrum flat;
    flat.grid_deg = {0, 1, 2};
    flat.power = {1, 1, 1};
    CHECK(pick_peaks(flat, 1).front() == 0.0);
    CHECK_THROWS_AS(pick_peaks(flat, 2), std::runtime_error);
}

TEST_CASE("parabolic refinement recovers an off-grid vertex") {
    SpatialSpectrum s;
    for (int i = -5; i <= 5; ++i) {
        s.grid_deg.push_back(i);
        // Gaussian in linear power is an exact parabola in dB.
        s.power.push_back(std::exp(-0.5 * (i - 0.3) * (i - 0.3)));
    }
    CHECK(pick_peaks(s, 1).front() == doctest::Approx(0.3).epsilon(1e-9));
}

}  // TEST_SUITE
