#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "locus/aoa.hpp"
#include "locus/pipeline.hpp"
#include "locus/plfit.hpp"

namespace locus::pipeline {

namespace {

constexpr std::size_t kRedrawCap = 100;

// Reports `measured` on the branch centred at `reference`.
double unwrap_near(double measured, double reference) noexcept {
    return reference + wrap_degrees(measured - reference);
}

double measure_aoa(const Environment& env, int anchor_id, double biased_true_deg,
                   const ChannelProfile& ch, Rng& rng) {
    const double boresight = env.boresight_deg(anchor_id);
    if (ch.aoa_mode == AoaMode::fast)
        return unwrap_near(biased_true_deg + ch.aoa_noise_deg * standard_normal(rng), boresight);

    // Full physics: MUSIC on simulated array snapshots, array facing the boresight.
    const double relative = std::clamp(wrap_degrees(biased_true_deg - boresight), -90.0, 90.0);
    const SourceSpec source{relative, ch.music.snr_db};
    const SnapshotMatrix x = simulate_snapshots(ch.music.array, std::span(&source, 1), 0.0, rng);
    return boresight + estimate_aoa(x, 1, ch.music.grid_step_deg).front();
}

}  // namespace

std::string_view layout_name(Layout l) noexcept { return l == Layout::rssi ? "rssi" : "hybrid"; }

Layout parse_layout(std::string_view name) {
    if (name == "rssi") return Layout::rssi;
    if (name == "hybrid") return Layout::hybrid;
    throw std::invalid_argument("unknown layout '" + std::string(name) + "'");
}

std::size_t feature_width(Layout l) noexcept { return l == Layout::rssi ? 3 : 6; }

std::string_view aoa_mode_name(AoaMode m) noexcept { return m == AoaMode::fast ? "fast" : "music"; }

AoaMode parse_aoa_mode(std::string_view name) {
    if (name == "fast") return AoaMode::fast;
    if (name == "music") return AoaMode::music;
    throw std::invalid_argument("unknown aoa mode '" + std::string(name) + "'");
}

constexpr double kMinThresholdDb = 1e-9;

OutlierPolicy OutlierPolicy::from_sigma(const std::array<PathLossParams, 3>& params, double k,
                                        double aoa_threshold_deg) {
    OutlierPolicy p;
    for (std::size_t i = 0; i < 3; ++i) p.rssi_threshold_db[i] = std::max(k * params[i].sigma, kMinThresholdDb);
    p.aoa_threshold_deg = aoa_threshold_deg;
    return p;
}

Screen screen_outlier(std::span<const double> theoretical, std::span<const double> measured,
                      const OutlierPolicy& policy) {
    if (theoretical.size() != measured.size() || (measured.size() != 3 && measured.size() != 6))
        throw std::invalid_argument("feature layouts do not match");
    for (std::size_t i = 0; i < 3; ++i)
        if (std::abs(measured[i] - theoretical[i]) > policy.rssi_threshold_db[i]) return Screen::reject;
    for (std::size_t i = 3; i < measured.size(); ++i)
        if (std::abs(wrap_degrees(measured[i] - theoretical[i])) > policy.aoa_threshold_deg)
            return Screen::reject;
    return Screen::accept;
}

std::vector<double> theoretical_features(const Environment& env,
                                         const std::array<PathLossParams, 3>& params, Point2D p,
                                         Layout layout) {
    std::vector<double> f;
    f.reserve(feature_width(layout));
    for (int a = 1; a <= 3; ++a) {
        const PathLossParams& pl = params[static_cast<std::size_t>(a - 1)];
        // Inside the reference distance the model saturates at P_R(d0).
        f.push_back(expected_rssi(pl, std::max(true_distance(env, a, p), pl.d0)));
    }
    if (layout == Layout::hybrid)
        for (int a = 1; a <= 3; ++a) f.push_back(unwrap_near(true_aoa(env, a, p), env.boresight_deg(a)));
    return f;
}

Dataset generate_dataset(const Environment& env, const ChannelProfile& channel,
                         std::size_t n_per_point, Layout layout, const OutlierPolicy& outlier,
                         std::uint64_t seed) {
    if (n_per_point == 0) throw std::invalid_argument("n_per_point must be >= 1");
    for (const auto& p : channel.path_loss) p.validate();
    channel.nlos.validate();
    if (!(channel.aoa_noise_deg >= 0.0)) throw std::invalid_argument("aoa noise must be >= 0");

    Dataset ds;
    ds.environment = env.name();
    ds.layout = layout;
    ds.seed = seed;
    ds.n_per_point = n_per_point;
    ds.samples.reserve(env.test_points().size() * n_per_point);

    Rng rng(seed);
    const std::size_t width = feature_width(layout);
    for (std::size_t pid = 0; pid < env.test_points().size(); ++pid) {
        const Point2D p = env.test_points()[pid];
        const std::vector<double> theory = theoretical_features(env, channel.theory(), p, layout);
        std::array<double, 3> dist{};
        std::array<double, 3> angle{};
        for (int a = 1; a <= 3; ++a) {
            const auto i = static_cast<std::size_t>(a - 1);
            dist[i] = std::max(true_distance(env, a, p), channel.path_loss[i].d0);
            angle[i] = true_aoa(env, a, p);
        }

        for (std::size_t s = 0; s < n_per_point; ++s) {
            std::vector<double> measured(width);
            std::size_t attempt = 0;
            for (;; ++attempt) {
                if (attempt == kRedrawCap)
                    throw std::runtime_error("outlier policy rejected " + std::to_string(kRedrawCap) +
                                             " consecutive draws in '" + env.name() + "'");
                for (std::size_t i = 0; i < 3; ++i) {
                    const double rssi = simulate_rssi(channel.path_loss[i], dist[i], rng);
                    const auto [faded, biased] = apply_nlos(rssi, angle[i], channel.nlos, rng);
                    measured[i] = faded;
                    if (layout == Layout::hybrid)
                        measured[3 + i] = measure_aoa(env, static_cast<int>(i) + 1, biased, channel, rng);
                }
                if (screen_outlier(theory, measured, outlier) == Screen::accept) break;
            }
            ds.rejections += attempt;
            ds.samples.push_back({std::move(measured), p, pid});
        }
    }
    return ds;
}

std::array<PathLossParams, 3> calibrate_channel(const Environment& env, const ChannelProfile& channel,
                                                std::size_t samples_per_anchor, std::uint64_t seed) {
    if (samples_per_anchor < 3) throw std::invalid_argument("calibration needs at least 3 samples per anchor");
    Rng rng(seed);
    std::array<PathLossParams, 3> fitted{};
    for (int a = 1; a <= 3; ++a) {
        const auto i = static_cast<std::size_t>(a - 1);
        const PathLossParams& pl = channel.path_loss[i];
        const Point2D origin = env.anchor(a).position;
        double reach = pl.d0;
        for (Point2D c : {Point2D{0.0, 0.0}, Point2D{env.length(), 0.0}, Point2D{0.0, env.width()},
                          Point2D{env.length(), env.width()}})
            reach = std::max(reach, distance(origin, c));
        if (reach <= pl.d0) throw std::invalid_argument("room too small to calibrate beyond d0");

        std::uniform_real_distribution<double> span(pl.d0, reach);
        std::vector<FitSample> sweep;
        sweep.reserve(samples_per_anchor);
        for (std::size_t s = 0; s < samples_per_anchor; ++s) {
            const double d = span(rng);
            const double rssi = simulate_rssi(pl, d, rng);
            sweep.push_back({d, apply_nlos(rssi, 0.0, channel.nlos, rng).first});
        }
        fitted[i] = fit_path_loss(sweep, pl.d0).params;
    }
    return fitted;
}

Dataset project_layout(const Dataset& ds, Layout layout) {
    if (layout == ds.layout) return ds;
    if (layout == Layout::hybrid) throw std::invalid_argument("cannot add AoA columns to an RSSI dataset");
    Dataset out = ds;
    out.layout = layout;
    for (auto& s : out.samples) s.features.resize(feature_width(layout));
    return out;
}

Split split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("train fraction must be in (0, 1)");
    std::size_t points = 0;
    for (const auto& s : ds.samples) points = std::max(points, s.point_id + 1);
    std::vector<std::vector<std::size_t>> by_point(points);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) by_point[ds.samples[i].point_id].push_back(i);

    Split out{ds, ds};
    out.train.samples.clear();
    out.test.samples.clear();
    Rng rng(seed);
    for (auto& idx : by_point) {
        if (idx.empty()) continue;
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        if (n_train == 0 || n_train == idx.size())
            throw std::invalid_argument("train fraction leaves a test point with an empty split");
        for (std::size_t k = 0; k < idx.size(); ++k)
            (k < n_train ? out.train : out.test).samples.push_back(ds.samples[idx[k]]);
    }
    return out;
}

NormStats compute_norm_stats(const Dataset& train) {
    if (train.samples.empty()) throw std::invalid_argument("cannot normalize an empty dataset");
    const std::size_t w = train.samples.front().features.size();
    NormStats s;
    s.feature_min.assign(w, std::numeric_limits<double>::infinity());
    s.feature_max.assign(w, -std::numeric_limits<double>::infinity());
    s.target_min = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    s.target_max = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& smp : train.samples) {
        if (smp.features.size() != w) throw std::invalid_argument("inconsistent feature widths");
        for (std::size_t i = 0; i < w; ++i) {
            s.feature_min[i] = std::min(s.feature_min[i], smp.features[i]);
            s.feature_max[i] = std::max(s.feature_max[i], smp.features[i]);
        }
        s.target_min = {std::min(s.target_min.x, smp.target.x), std::min(s.target_min.y, smp.target.y)};
        s.target_max = {std::max(s.target_max.x, smp.target.x), std::max(s.target_max.y, smp.target.y)};
    }
    return s;
}

namespace {

double unit(double v, double lo, double hi) noexcept { return hi > lo ? (v - lo) / (hi - lo) : 0.0; }

}  // namespace

std::vector<double> normalize_features(std::span<const double> features, const NormStats& s) {
    if (features.size() != s.feature_min.size()) throw std::invalid_argument("feature width mismatch");
    std::vector<double> out(features.size());
    for (std::size_t i = 0; i < features.size(); ++i)
        out[i] = unit(features[i], s.feature_min[i], s.feature_max[i]);
    return out;
}

Point2D normalize_target(Point2D t, const NormStats& s) {
    return {unit(t.x, s.target_min.x, s.target_max.x), unit(t.y, s.target_min.y, s.target_max.y)};
}

Point2D denormalize_target(Point2D t, const NormStats& s) {
    return {s.target_min.x + t.x * (s.target_max.x - s.target_min.x),
            s.target_min.y + t.y * (s.target_max.y - s.target_min.y)};
}

std::vector<neural::Sample> normalize(const Dataset& ds, const NormStats& s) {
    std::vector<neural::Sample> out;
    out.reserve(ds.samples.size());
    for (const auto& smp : ds.samples)
        out.push_back({normalize_features(smp.features, s), normalize_target(smp.target, s)});
    return out;
}

nlohmann::json norm_stats_to_json(const NormStats& s) {
    return {{"feature_min", s.feature_min},
            {"feature_max", s.feature_max},
            {"target_min", s.target_min},
            {"target_max", s.target_max}};
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
    NormStats s;
    s.feature_min = j.at("feature_min").get<std::vector<double>>();
    s.feature_max = j.at("feature_max").get<std::vector<double>>();
    s.target_min = j.at("target_min").get<Point2D>();
    s.target_max = j.at("target_max").get<Point2D>();
    if (s.feature_min.size() != s.feature_max.size()) throw std::invalid_argument("malformed norm stats");
    return s;
}

void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    os << "point_id,x_m,y_m,rssi1_dbm,rssi2_dbm,rssi3_dbm";
    if (ds.layout == Layout::hybrid) os << ",aoa1_deg,aoa2_deg,aoa3_deg";
    os << '\n';
    const auto old = os.precision(17);
    for (const auto& s : ds.samples) {
        os << s.point_id << ',' << s.target.x << ',' << s.target.y;
        for (double f : s.features) os << ',' << f;
        os << '\n';
    }
    os.precision(old);
}

Dataset read_dataset_csv(std::istream& is) {
    Dataset ds;
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty dataset file");
    const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    if (columns == 6) ds.layout = Layout::rssi;
    else if (columns == 9) ds.layout = Layout::hybrid;
    else throw std::invalid_argument("dataset header must have 6 or 9 columns");
    const std::size_t width = feature_width(ds.layout);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        if (v.size() != columns) throw std::invalid_argument("dataset row has wrong column count");
        MeasurementSample s;
        s.point_id = static_cast<std::size_t>(v[0]);
        s.target = {v[1], v[2]};
        s.features.assign(v.begin() + 3, v.begin() + 3 + static_cast<std::ptrdiff_t>(width));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

}  // namespace locus::pipeline
