#pragma once

#include <array>

#include "locus/channel.hpp"
#include "locus/environment.hpp"

namespace locus {

struct DistanceVector {
    std::array<double, 3> d{};

    double operator[](std::size_t i) const { return d[i]; }
};

/// A X = b, with A stored row-major.
struct LinearSystem {
    std::array<std::array<double, 2>, 2> a{};
    std::array<double, 2> b{};
};

struct PositionEstimate {
    Point2D p;
    double residual = 0.0;  // m; meaning depends on the estimator
};

/// Inverse of the mean path-loss curve, clamped below at d0.
double rssi_to_distance(const PathLossParams& params, double rssi);

/// Subtracts the anchor-3 circle from the anchor-1 and anchor-2 circles.
/// Throws std::invalid_argument for collinear anchors.
LinearSystem linearize(const std::array<Point2D, 3>& anchors, const DistanceVector& d);

/// X = (A^T A)^{-1} A^T b. Throws std::domain_error when cond(A) > 1e12.
Point2D solve_position(const LinearSystem& sys);

/// 2-norm condition number of a 2x2 matrix (infinity when singular).
double condition_number(const std::array<std::array<double, 2>, 2>& a) noexcept;

/// RSSI -> distances -> linearized least squares. The residual is the RMS of
/// | |p - anchor_i| - d_i | over the three anchors.
PositionEstimate trilaterate(const Environment& env, const std::array<PathLossParams, 3>& params,
                             const std::array<double, 3>& rssi);

/// Same, starting from distances.
PositionEstimate trilaterate_distances(const std::array<Point2D, 3>& anchors,
                                       const DistanceVector& d);

}  // namespace locus
