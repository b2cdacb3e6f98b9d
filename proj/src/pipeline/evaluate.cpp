#include <cmath>
#include <limits>
#include <stdexcept>

#include "locus/hybrid.hpp"
#include "locus/pipeline.hpp"
#include "locus/trilat.hpp"

namespace locus::pipeline {

EvalReport score(const Dataset& test, const Predictor& predict, std::string family) {
    if (test.samples.empty()) throw std::invalid_argument("cannot evaluate on an empty test split");
    std::size_t points = 0;
    for (const auto& s : test.samples) points = std::max(points, s.point_id + 1);
    std::vector<double> sum(points, 0.0);
    std::vector<std::size_t> count(points, 0);
    double total = 0.0;
    for (const auto& s : test.samples) {
        const double err = distance(predict(s), s.target);
        sum[s.point_id] += err;
        ++count[s.point_id];
        total += err;
    }
    EvalReport r;
    r.model_family = std::move(family);
    r.environment = test.environment;
    r.layout = test.layout;
    r.n = test.samples.size();
    r.overall_mae_mm = 1000.0 * total / static_cast<double>(r.n);
    r.per_point_mae_mm.resize(points);
    for (std::size_t i = 0; i < points; ++i)
        r.per_point_mae_mm[i] = count[i] ? 1000.0 * sum[i] / static_cast<double>(count[i])
                                         : std::numeric_limits<double>::quiet_NaN();
    return r;
}

EvalReport evaluate_mae(const neural::Model& model, const Dataset& test, const NormStats& stats) {
    if (static_cast<std::size_t>(neural::input_width(model)) != feature_width(test.layout))
        throw std::invalid_argument("model input width does not match dataset layout");
    return score(
        test,
        [&](const MeasurementSample& s) {
            return denormalize_target(neural::forward(model, normalize_features(s.features, stats)), stats);
        },
        std::string(neural::family_name(neural::family(model))));
}

Predictor trilateration_predictor(const Environment& env, const std::array<PathLossParams, 3>& params) {
    return [env, params](const MeasurementSample& s) {
        return trilaterate(env, params, {s.features[0], s.features[1], s.features[2]}).p;
    };
}

Predictor hybrid_predictor(const Environment& env, const std::array<PathLossParams, 3>& params) {
    return [env, params](const MeasurementSample& s) {
        if (s.features.size() != 6) throw std::invalid_argument("hybrid baseline needs AoA features");
        DistanceVector d;
        for (std::size_t i = 0; i < 3; ++i) d.d[i] = rssi_to_distance(params[i], s.features[i]);
        return hybrid_position(env, d, {s.features[3], s.features[4], s.features[5]}).p;
    };
}

double improvement_percent(double mae_rssi_mm, double mae_hybrid_mm) {
    if (!(mae_rssi_mm > 0.0)) throw std::invalid_argument("baseline MAE must be positive");
    return 100.0 * (mae_rssi_mm - mae_hybrid_mm) / mae_rssi_mm;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
    nlohmann::json per_point = nlohmann::json::array();
    for (double v : r.per_point_mae_mm) per_point.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
    return {{"model_family", r.model_family},
            {"environment", r.environment},
            {"layout", std::string(layout_name(r.layout))},
            {"n", r.n},
            {"overall_mae_mm", r.overall_mae_mm},
            {"per_point_mae_mm", per_point}};
}

}  // namespace locus::pipeline
