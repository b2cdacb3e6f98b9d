#pragma once

#include <cmath>
#include <span>

#include <doctest.h>

#include "locus/environment.hpp"

namespace locus::test {

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    REQUIRE(a.size() == b.size());
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double gap(Point2D a, Point2D b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace locus::test
