#include "locus/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace locus {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double triangle_area(Point2D a, Point2D b, Point2D c) noexcept {
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

bool valid_sign(int s) noexcept { return s == 1 || s == -1; }

}  // namespace

double distance(Point2D a, Point2D b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

SignPair default_frame(int anchor_id) {
    switch (anchor_id) {
        case 1: return {1, 1};
        case 2: return {1, -1};
        case 3: return {-1, -1};
        default: throw std::out_of_range("anchor id must be 1, 2 or 3");
    }
}

Environment::Environment(std::string name, double length, double width,
                         std::array<Anchor, 3> anchors, std::vector<Point2D> test_points)
    : name_(std::move(name)),
      length_(length),
      width_(width),
      anchors_(anchors),
      test_points_(std::move(test_points)) {
    if (!(length_ > 0.0) || !(width_ > 0.0) || !std::isfinite(length_) || !std::isfinite(width_))
        throw std::invalid_argument("environment '" + name_ + "': dimensions must be positive");
    for (std::size_t i = 0; i < anchors_.size(); ++i) {
        const Anchor& a = anchors_[i];
        if (a.id != static_cast<int>(i) + 1)
            throw std::invalid_argument("anchors must be ordered with ids 1, 2, 3");
        if (!std::isfinite(a.position.x) || !std::isfinite(a.position.y))
            throw std::invalid_argument("anchor position must be finite");
        if (!valid_sign(a.frame.sx) || !valid_sign(a.frame.sy))
            throw std::invalid_argument("anchor frame signs must be +1 or -1");
    }
    if (triangle_area(anchors_[0].position, anchors_[1].position, anchors_[2].position) <= 1e-6)
        throw std::invalid_argument("anchors must be distinct and non-collinear");
    for (const Point2D& p : test_points_) {
        if (!contains(p))
            throw std::invalid_argument("test point outside environment '" + name_ + "'");
    }
}

const Anchor& Environment::anchor(int id) const {
    if (id < 1 || id > 3) throw std::out_of_range("anchor id must be 1, 2 or 3");
    return anchors_[static_cast<std::size_t>(id - 1)];
}

std::array<Point2D, 3> Environment::anchor_positions() const {
    return {anchors_[0].position, anchors_[1].position, anchors_[2].position};
}

bool Environment::contains(Point2D p) const noexcept {
    return std::isfinite(p.x) && std::isfinite(p.y) && p.x >= 0.0 && p.x <= length_ &&
           p.y >= 0.0 && p.y <= width_;
}

double Environment::boresight_deg(int anchor_id) const {
    const Anchor& a = anchor(anchor_id);
    const double cx = 0.5 * length_;
    const double cy = 0.5 * width_;
    const double dx = cx >= a.position.x ? 1.0 : -1.0;
    const double dy = cy >= a.position.y ? 1.0 : -1.0;
    return wrap_degrees(std::atan2(a.frame.sx * dx, a.frame.sy * dy) * kRadToDeg);
}

Environment make_environment(std::string name, double length, double width,
                             std::vector<Point2D> test_points) {
    std::array<Anchor, 3> anchors{
        Anchor{1, {0.0, 0.0}, default_frame(1)},
        Anchor{2, {length, 0.0}, default_frame(2)},
        Anchor{3, {0.0, width}, default_frame(3)},
    };
    return Environment(std::move(name), length, width, anchors, std::move(test_points));
}

std::vector<Point2D> default_test_points(double length, double width, std::size_t count,
                                         std::uint64_t seed) {
    if (!(length > 0.0) || !(width > 0.0))
        throw std::invalid_argument("dimensions must be positive");
    if (count == 0) return {};
    const double n = static_cast<double>(count);
    const auto rows = static_cast<std::size_t>(
        std::max(1.0, std::round(std::sqrt(n * width / length))));
    const std::size_t cols = (count + rows - 1) / rows;
    const double cell_x = length / static_cast<double>(cols);
    const double cell_y = width / static_cast<double>(rows);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(-0.25, 0.25);
    std::vector<Point2D> points;
    points.reserve(count);
    for (std::size_t r = 0; r < rows && points.size() < count; ++r) {
        for (std::size_t c = 0; c < cols && points.size() < count; ++c) {
            const double jx = jitter(rng);
            const double jy = jitter(rng);
            points.push_back({(static_cast<double>(c) + 0.5 + jx) * cell_x,
                              (static_cast<double>(r) + 0.5 + jy) * cell_y});
        }
    }
    return points;
}

Environment big_classroom(std::uint64_t point_seed) {
    return make_environment("big_classroom", 13.0, 13.0,
                            default_test_points(13.0, 13.0, 10, point_seed));
}

Environment corridor(std::uint64_t point_seed) {
    return make_environment("corridor", 12.0, 4.0, default_test_points(12.0, 4.0, 10, point_seed));
}

Environment small_classroom(std::uint64_t point_seed) {
    return make_environment("small_classroom", 9.0, 7.0,
                            default_test_points(9.0, 7.0, 10, point_seed));
}

double true_distance(const Environment& env, int anchor_id, Point2D p) {
    return distance(env.anchor(anchor_id).position, p);
}

double true_aoa(const Environment& env, int anchor_id, Point2D p) {
    const Anchor& a = env.anchor(anchor_id);
    const double dx = p.x - a.position.x;
    const double dy = p.y - a.position.y;
    if (dx == 0.0 && dy == 0.0)
        throw std::invalid_argument("angle of arrival undefined at the anchor position");
    return wrap_degrees(std::atan2(a.frame.sx * dx, a.frame.sy * dy) * kRadToDeg);
}

double wrap_degrees(double deg) noexcept {
    double w = std::fmod(deg, 360.0);
    if (w > 180.0) w -= 360.0;
    if (w <= -180.0) w += 360.0;
    return w;
}

void to_json(nlohmann::json& j, const Point2D& p) { j = nlohmann::json{{"x", p.x}, {"y", p.y}}; }

void from_json(const nlohmann::json& j, Point2D& p) {
    p.x = j.at("x").get<double>();
    p.y = j.at("y").get<double>();
}

nlohmann::json environment_to_json(const Environment& env) {
    nlohmann::json anchors = nlohmann::json::array();
    for (const Anchor& a : env.anchors()) {
        anchors.push_back({{"id", a.id},
                           {"x", a.position.x},
                           {"y", a.position.y},
                           {"sx", a.frame.sx},
                           {"sy", a.frame.sy}});
    }
    return {{"name", env.name()},
            {"length_m", env.length()},
            {"width_m", env.width()},
            {"anchors", anchors},
            {"test_points", env.test_points()}};
}

Environment environment_from_json(const nlohmann::json& j) {
    const auto name = j.at("name").get<std::string>();
    const double length = j.at("length_m").get<double>();
    const double width = j.at("width_m").get<double>();
    std::vector<Point2D> points;
    if (j.contains("test_points")) points = j.at("test_points").get<std::vector<Point2D>>();

    if (!j.contains("anchors")) return make_environment(name, length, width, std::move(points));

    const auto& arr = j.at("anchors");
    if (!arr.is_array() || arr.size() != 3)
        throw std::invalid_argument("environment needs exactly 3 anchors");
    std::array<Anchor, 3> anchors;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& a = arr[i];
        anchors[i].id = a.value("id", static_cast<int>(i) + 1);
        anchors[i].position = {a.at("x").get<double>(), a.at("y").get<double>()};
        const SignPair def = default_frame(static_cast<int>(i) + 1);
        anchors[i].frame = {a.value("sx", def.sx), a.value("sy", def.sy)};
    }
    return Environment(name, length, width, anchors, std::move(points));
}

}  // namespace locus
