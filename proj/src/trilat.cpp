#include "locus/trilat.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace locus {

double rssi_to_distance(const PathLossParams& params, double rssi) {
    params.validate();
    if (!std::isfinite(rssi)) throw std::invalid_argument("rssi must be finite");
    const double d = params.d0 * std::pow(10.0, (params.p_r_d0 - rssi) / (10.0 * params.gamma));
    return d < params.d0 ? params.d0 : d;
}

LinearSystem linearize(const std::array<Point2D, 3>& anchors, const DistanceVector& d) {
    const Point2D& p3 = anchors[2];
    LinearSystem sys;
    for (std::size_t i = 0; i < 2; ++i) {
        const Point2D& pi = anchors[i];
        sys.a[i][0] = 2.0 * (p3.x - pi.x);
        sys.a[i][1] = 2.0 * (p3.y - pi.y);
        sys.b[i] = d[i] * d[i] - d[2] * d[2] - pi.x * pi.x + p3.x * p3.x - pi.y * pi.y + p3.y * p3.y;
    }
    const double det = sys.a[0][0] * sys.a[1][1] - sys.a[0][1] * sys.a[1][0];
    const double scale = std::hypot(sys.a[0][0], sys.a[0][1]) * std::hypot(sys.a[1][0], sys.a[1][1]);
    if (!(std::abs(det) > 1e-9 * scale)) throw std::invalid_argument("anchors are collinear");
    return sys;
}

double condition_number(const std::array<std::array<double, 2>, 2>& a) noexcept {
    // Singular values of a 2x2 matrix from the invariants of A^T A.
    const double fro2 = a[0][0] * a[0][0] + a[0][1] * a[0][1] + a[1][0] * a[1][0] + a[1][1] * a[1][1];
    const double det = std::abs(a[0][0] * a[1][1] - a[0][1] * a[1][0]);
    if (det == 0.0) return std::numeric_limits<double>::infinity();
    const double disc = std::sqrt(std::max(0.0, fro2 * fro2 - 4.0 * det * det));
    const double s_max2 = 0.5 * (fro2 + disc);
    const double s_min2 = det * det / s_max2;
    return std::sqrt(s_max2 / s_min2);
}

Point2D solve_position(const LinearSystem& sys) {
    const auto& a = sys.a;
    for (const auto& row : a)
        for (double v : row)
            if (!std::isfinite(v)) throw std::domain_error("linear system has non-finite entries");
    if (!std::isfinite(sys.b[0]) || !std::isfinite(sys.b[1]))
        throw std::domain_error("linear system has non-finite entries");
    if (condition_number(a) > 1e12) throw std::domain_error("linear system is ill-conditioned");

    // Normal equations N X = A^T b.
    const double n00 = a[0][0] * a[0][0] + a[1][0] * a[1][0];
    const double n01 = a[0][0] * a[0][1] + a[1][0] * a[1][1];
    const double n11 = a[0][1] * a[0][1] + a[1][1] * a[1][1];
    const double r0 = a[0][0] * sys.b[0] + a[1][0] * sys.b[1];
    const double r1 = a[0][1] * sys.b[0] + a[1][1] * sys.b[1];
    const double det = n00 * n11 - n01 * n01;
    return {(n11 * r0 - n01 * r1) / det, (n00 * r1 - n01 * r0) / det};
}

PositionEstimate trilaterate_distances(const std::array<Point2D, 3>& anchors,
                                       const DistanceVector& d) {
    for (double di : d.d)
        if (!(di > 0.0) || !std::isfinite(di))
            throw std::invalid_argument("distances must be positive and finite");
    const Point2D p = solve_position(linearize(anchors, d));
    double ss = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = distance(p, anchors[i]) - d[i];
        ss += r * r;
    }
    return {p, std::sqrt(ss / 3.0)};
}

PositionEstimate trilaterate(const Environment& env, const std::array<PathLossParams, 3>& params,
                             const std::array<double, 3>& rssi) {
    DistanceVector d;
    for (std::size_t i = 0; i < 3; ++i) d.d[i] = rssi_to_distance(params[i], rssi[i]);
    return trilaterate_distances(env.anchor_positions(), d);
}

}  // namespace locus
