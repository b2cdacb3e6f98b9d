#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "locus/trilat.hpp"
#include "support.hpp"

using namespace locus;

namespace {

DistanceVector exact_distances(const std::array<Point2D, 3>& anchors, Point2D p) {
    DistanceVector d;
    for (std::size_t i = 0; i < 3; ++i) d.d[i] = distance(anchors[i], p);
    return d;
}

double objective(const LinearSystem& s, double x, double y) {
    double f = 0.0;
    for (int r = 0; r < 2; ++r) {
        const double e = s.a[r][0] * x + s.a[r][1] * y - s.b[r];
        f += e * e;
    }
    return f;
}

// Coarse-to-fine exhaustive search over a square window, ending on a 1 mm grid.
Point2D grid_argmin(const LinearSystem& s, Point2D centre, double half_width) {
    Point2D best = centre;
    double step = half_width / 50.0;
    while (true) {
        double fbest = std::numeric_limits<double>::infinity();
        Point2D next = best;
        for (int i = -60; i <= 60; ++i)
            for (int j = -60; j <= 60; ++j) {
                const double x = best.x + i * step;
                const double y = best.y + j * step;
                const double f = objective(s, x, y);
                if (f < fbest) {
                    fbest = f;
                    next = {x, y};
                }
            }
        best = next;
        if (step <= 1e-3) break;
        step = std::max(step / 10.0, 1e-3);
    }
    return best;
}

}  // namespace

TEST_SUITE("trilat") {

TEST_CASE("rssi_to_distance inverts the mean curve") {
    const PathLossParams p{2.0, 0.0, -40.0, 1.0};
    CHECK(rssi_to_distance(p, -60.0) == doctest::Approx(10.0).epsilon(1e-14));
    CHECK(rssi_to_distance(p, -40.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rssi_to_distance(p, -30.0) == 1.0);

    const PathLossParams q{2.7, 0.0, -37.0, 1.0};
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1.0, 20.0);
    for (int i = 0; i < 100; ++i) {
        const double d = u(rng);
        CHECK(std::abs(rssi_to_distance(q, expected_rssi(q, d)) - d) < 1e-9);
    }
    double prev = rssi_to_distance(q, -90.0);
    for (double r = -89.0; r <= -38.0; r += 1.0) {
        const double d = rssi_to_distance(q, r);
        CHECK(d < prev);
        prev = d;
    }
    CHECK_THROWS((rssi_to_distance(PathLossParams{0.0, 0.0, -40.0, 1.0}, -50.0)));
}

TEST_CASE("linearize against hand expansion") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    std::uniform_real_distribution<double> ud(0.5, 15.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::array<Point2D, 3> a{{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}}};
        const DistanceVector d{{ud(rng), ud(rng), ud(rng)}};
        const LinearSystem s = linearize(a, d);
        // Circle i: x^2 - 2 x_i x + x_i^2 + y^2 - 2 y_i y + y_i^2 = d_i^2.
        // Circle i minus circle 3 cancels the quadratic terms.
        for (int i = 0; i < 2; ++i) {
            const double a0 = -2.0 * a[i].x + 2.0 * a[2].x;
            const double a1 = -2.0 * a[i].y + 2.0 * a[2].y;
            const double rhs = d.d[i] * d.d[i] - d.d[2] * d.d[2] - a[i].x * a[i].x - a[i].y * a[i].y +
                               a[2].x * a[2].x + a[2].y * a[2].y;
            CHECK(s.a[i][0] == doctest::Approx(a0).epsilon(1e-13));
            CHECK(s.a[i][1] == doctest::Approx(a1).epsilon(1e-13));
            CHECK(s.b[i] == doctest::Approx(rhs).epsilon(1e-12));
        }
    }
}

TEST_CASE("exact distances give back the point") {
    const std::array<Point2D, 3> a{{{0, 0}, {13, 0}, {0, 13}}};
    const LinearSystem s = linearize(a, exact_distances(a, {4, 7}));
    const Point2D p = solve_position(s);
    CHECK(test::gap(p, {4, 7}) < 1e-9);
}

TEST_CASE("symmetric layout with equal distances lands on the axis") {
    const std::array<Point2D, 3> a{{{-3, 0}, {3, 0}, {0, 5}}};
    const Point2D p = solve_position(linearize(a, DistanceVector{{4.0, 4.0, 4.5}}));
    CHECK(std::abs(p.x) < 1e-12);
}

TEST_CASE("solve_position on simple systems") {
    LinearSystem id;
    id.a = {{{1, 0}, {0, 1}}};
    id.b = {4, 7};
    const Point2D p = solve_position(id);
    CHECK(p.x == doctest::Approx(4.0));
    CHECK(p.y == doctest::Approx(7.0));

    LinearSystem sing;
    sing.a = {{{1, 2}, {2, 4}}};
    sing.b = {1, 2};
    CHECK_THROWS_AS(solve_position(sing), std::domain_error);
    CHECK(condition_number(sing.a) > 1e12);
    CHECK(condition_number(id.a) == doctest::Approx(1.0));
}

TEST_CASE("noisy distances: closed form matches an exhaustive grid search") {
    const std::array<Point2D, 3> a{{{0, 0}, {9, 0}, {0, 7}}};
    std::mt19937_64 rng(6);
    std::normal_distribution<double> noise(0.0, 0.4);
    for (int trial = 0; trial < 5; ++trial) {
        DistanceVector d = exact_distances(a, {3.3, 2.9});
        for (double& v : d.d) v = std::max(0.5, v + noise(rng));
        const LinearSystem s = linearize(a, d);
        const Point2D closed = solve_position(s);
        const Point2D grid = grid_argmin(s, {4.5, 3.5}, 8.0);
        CHECK(test::gap(closed, grid) < 1.5e-3);
    }
}

TEST_CASE("noiseless trilateration over random in-room points") {
    for (const Environment& env : {big_classroom(), corridor(), small_classroom()}) {
        const std::array<PathLossParams, 3> pl{PathLossParams{2.5, 0.0, -40.0, 1.0}, PathLossParams{2.0, 0.0, -35.0, 1.0},
                                               PathLossParams{3.1, 0.0, -42.0, 1.0}};
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> ux(0.0, env.length());
        std::uniform_real_distribution<double> uy(0.0, env.width());
        int done = 0;
        while (done < 100) {
            const Point2D p{ux(rng), uy(rng)};
            bool near = false;
            for (int id = 1; id <= 3; ++id) near = near || true_distance(env, id, p) < 1.0;
            if (near) continue;
            std::array<double, 3> rssi{};
            for (int id = 1; id <= 3; ++id)
                rssi[id - 1] = expected_rssi(pl[id - 1], true_distance(env, id, p));
            const PositionEstimate e = trilaterate(env, pl, rssi);
            CHECK(test::gap(e.p, p) < 1e-6);
            CHECK(e.residual < 1e-6);
            ++done;
        }
    }
}

TEST_CASE("inflated distances leave a positive residual") {
    const std::array<Point2D, 3> a{{{0, 0}, {13, 0}, {0, 13}}};
    DistanceVector d = exact_distances(a, {5, 4});
    for (double& v : d.d) v *= 1.1;
    const PositionEstimate e = trilaterate_distances(a, d);
    CHECK(std::isfinite(e.p.x));
    CHECK(std::isfinite(e.p.y));
    CHECK(e.residual > 0.0);

    double rms = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = distance(e.p, a[i]) - d.d[i];
        rms += r * r;
    }
    CHECK(e.residual == doctest::Approx(std::sqrt(rms / 3.0)));
}

TEST_CASE("collinear anchors surface an error") {
    const std::array<Point2D, 3> a{{{0, 0}, {5, 0}, {10, 0}}};
    CHECK_THROWS(trilaterate_distances(a, DistanceVector{{3, 4, 8}}));
}

TEST_CASE("translation equivariance") {
    const std::array<Point2D, 3> a{{{0, 0}, {12, 0}, {0, 4}}};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Point2D p{12 * u(rng), 4 * u(rng)};
        DistanceVector d = exact_distances(a, p);
        for (double& v : d.d) v *= 1.0 + 0.2 * (u(rng) - 0.5);
        const Point2D v{-7.5 + 3 * u(rng), 2.25 + 3 * u(rng)};
        std::array<Point2D, 3> moved = a;
        for (auto& q : moved) q = {q.x + v.x, q.y + v.y};
        const Point2D e0 = trilaterate_distances(a, d).p;
        const Point2D e1 = trilaterate_distances(moved, d).p;
        CHECK(std::abs(e1.x - e0.x - v.x) < 1e-9);
        CHECK(std::abs(e1.y - e0.y - v.y) < 1e-9);
    }
}

}  // TEST_SUITE
