#include "locus/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace locus {

AnchorEstimate anchor_estimate(const Anchor& anchor, double d, double theta_deg) {
    if (!(d >= 0.0)) throw std::invalid_argument("distance must be >= 0");
    const double theta = theta_deg * std::numbers::pi / 180.0;
    return {{anchor.position.x + anchor.frame.sx * d * std::sin(theta),
             anchor.position.y + anchor.frame.sy * d * std::cos(theta)},
            anchor.id};
}

std::array<AnchorEstimate, 3> anchor_estimates(const Environment& env, const DistanceVector& d,
                                               const std::array<double, 3>& thetas_deg) {
    std::array<AnchorEstimate, 3> out;
    for (std::size_t i = 0; i < 3; ++i) out[i] = anchor_estimate(env.anchors()[i], d[i], thetas_deg[i]);
    return out;
}

PositionEstimate hybrid_position(const Environment& env, const DistanceVector& d,
                                 const std::array<double, 3>& thetas_deg) {
    const auto est = anchor_estimates(env, d, thetas_deg);
    PositionEstimate out;
    out.p = {(est[0].p.x + est[1].p.x + est[2].p.x) / 3.0,
             (est[0].p.y + est[1].p.y + est[2].p.y) / 3.0};
    out.residual = std::max({distance(est[0].p, est[1].p), distance(est[0].p, est[2].p),
                             distance(est[1].p, est[2].p)});
    return out;
}

}  // namespace locus
