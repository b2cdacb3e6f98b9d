#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace locus {

struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2D&, const Point2D&) = default;
};

double distance(Point2D a, Point2D b) noexcept;

/// Orientation of an anchor's angle frame. A receiver at distance d and angle
/// theta from the anchor sits at (x + sx*d*sin(theta), y + sy*d*cos(theta)).
struct SignPair {
    int sx = 1;
    int sy = 1;

    friend bool operator==(const SignPair&, const SignPair&) = default;
};

struct Anchor {
    int id = 1;  // 1-based
    Point2D position;
    SignPair frame;
};

/// Default frame for anchor ids 1..3: (+,+), (+,-), (-,-).
SignPair default_frame(int anchor_id);

/// A rectangular room [0,length] x [0,width] with three transmitters and a
/// set of receiver test points. Immutable once constructed.
class Environment {
public:
    Environment(std::string name, double length, double width, std::array<Anchor, 3> anchors,
                std::vector<Point2D> test_points);

    const std::string& name() const noexcept { return name_; }
    double length() const noexcept { return length_; }
    double width() const noexcept { return width_; }
    const std::array<Anchor, 3>& anchors() const noexcept { return anchors_; }
    const std::vector<Point2D>& test_points() const noexcept { return test_points_; }

    /// Throws std::out_of_range for ids outside {1,2,3}.
    const Anchor& anchor(int id) const;
    std::array<Point2D, 3> anchor_positions() const;

    bool contains(Point2D p) const noexcept;

    /// Angle (in the anchor's frame) of the diagonal pointing into the room.
    /// A linear array mounted at the anchor faces this direction, so every
    /// in-room receiver lies within +-90 deg of array broadside.
    double boresight_deg(int anchor_id) const;

private:
    std::string name_;
    double length_;
    double width_;
    std::array<Anchor, 3> anchors_;
    std::vector<Point2D> test_points_;
};

/// Corner placement: anchors at (0,0), (length,0), (0,width) with default frames.
Environment make_environment(std::string name, double length, double width,
                             std::vector<Point2D> test_points);

/// `count` points on a jittered interior grid, reproducible from `seed`.
std::vector<Point2D> default_test_points(double length, double width, std::size_t count,
                                         std::uint64_t seed);

Environment big_classroom(std::uint64_t point_seed = 1);
Environment corridor(std::uint64_t point_seed = 1);
Environment small_classroom(std::uint64_t point_seed = 1);

double true_distance(const Environment& env, int anchor_id, Point2D p);

/// Angle theta in (-180, 180] such that the anchor frame maps
/// (true_distance, theta) back onto p. Throws if p coincides with the anchor.
double true_aoa(const Environment& env, int anchor_id, Point2D p);

/// Wraps an angle in degrees into (-180, 180].
double wrap_degrees(double deg) noexcept;

void to_json(nlohmann::json& j, const Point2D& p);
void from_json(const nlohmann::json& j, Point2D& p);
nlohmann::json environment_to_json(const Environment& env);
Environment environment_from_json(const nlohmann::json& j);

}  // namespace locus
