#pragma once

#include <array>

#include "locus/environment.hpp"
#include "locus/trilat.hpp"

namespace locus {

struct AnchorEstimate {
    Point2D p;
    int anchor_id = 1;
};

/// Projects (d, theta) through the anchor frame:
/// x = x_i + sx*d*sin(theta), y = y_i + sy*d*cos(theta).
AnchorEstimate anchor_estimate(const Anchor& anchor, double d, double theta_deg);

/// Mean of the three single-anchor estimates. The residual is their spread,
/// the largest pairwise distance among them.
PositionEstimate hybrid_position(const Environment& env, const DistanceVector& d,
                                 const std::array<double, 3>& thetas_deg);

/// The three single-anchor estimates behind hybrid_position.
std::array<AnchorEstimate, 3> anchor_estimates(const Environment& env, const DistanceVector& d,
                                               const std::array<double, 3>& thetas_deg);

}  // namespace locus
