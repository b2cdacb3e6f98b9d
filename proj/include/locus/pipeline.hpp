#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "locus/channel.hpp"
#include "locus/environment.hpp"
#include "locus/neural.hpp"

namespace locus::pipeline {

/// Feature layout: [r1,r2,r3] or [r1,r2,r3,theta1,theta2,theta3].
enum class Layout { rssi, hybrid };

std::string_view layout_name(Layout l) noexcept;
Layout parse_layout(std::string_view name);
std::size_t feature_width(Layout l) noexcept;

struct MeasurementSample {
    std::vector<double> features;  // raw: dBm and degrees
    Point2D target;                // m
    std::size_t point_id = 0;
};

struct Dataset {
    std::string environment;
    Layout layout = Layout::hybrid;
    std::vector<MeasurementSample> samples;
    std::uint64_t seed = 0;
    std::size_t n_per_point = 0;
    std::size_t rejections = 0;  // redraws triggered by the outlier screen
};

struct OutlierPolicy {
    std::array<double, 3> rssi_threshold_db{};
    double aoa_threshold_deg = 10.0;

    /// rssi threshold = k * sigma per anchor, never below 1e-9 dB.
    static OutlierPolicy from_sigma(const std::array<PathLossParams, 3>& params, double k = 3.0,
                                    double aoa_threshold_deg = 10.0);
};

enum class Screen { accept, reject };

/// Rejects when any RSSI or AoA deviates from theory by more than its threshold.
/// Angle differences are wrapped into (-180, 180].
Screen screen_outlier(std::span<const double> theoretical, std::span<const double> measured,
                      const OutlierPolicy& policy);

enum class AoaMode { fast, music };

std::string_view aoa_mode_name(AoaMode m) noexcept;
AoaMode parse_aoa_mode(std::string_view name);

struct MusicSettings {
    ArraySpec array{};
    double snr_db = 20.0;
    double grid_step_deg = 0.1;
};

/// Everything that shapes the simulated measurements in one room.
struct ChannelProfile {
    std::array<PathLossParams, 3> path_loss{};
    NlosModel nlos{};
    double aoa_noise_deg = 2.0;  // estimation noise in fast mode
    AoaMode aoa_mode = AoaMode::fast;
    MusicSettings music{};
    /// Fitted model used for the theoretical features; path_loss when unset.
    std::optional<std::array<PathLossParams, 3>> reference;

    const std::array<PathLossParams, 3>& theory() const noexcept { return reference ? *reference : path_loss; }
};

/// Simulates a distance sweep from each anchor through the channel (NLoS included)
/// and fits a log-distance model per anchor.
std::array<PathLossParams, 3> calibrate_channel(const Environment& env, const ChannelProfile& channel,
                                                std::size_t samples_per_anchor, std::uint64_t seed);

/// Noise-free features of a receiver at p.
std::vector<double> theoretical_features(const Environment& env,
                                         const std::array<PathLossParams, 3>& params, Point2D p,
                                         Layout layout);

/// Draws n_per_point screened samples at every test point. Rejected draws are
/// redrawn; a sample that fails 100 times in a row throws std::runtime_error.
///
/// Measured angles are reported on the branch continuous around each anchor's
/// boresight, so features never jump across +-180 degrees.
Dataset generate_dataset(const Environment& env, const ChannelProfile& channel,
                         std::size_t n_per_point, Layout layout, const OutlierPolicy& outlier,
                         std::uint64_t seed);

/// Drops the AoA columns of a hybrid dataset (same draws, same order).
Dataset project_layout(const Dataset& ds, Layout layout);

struct Split {
    Dataset train;
    Dataset test;
};

/// Stratified per test point: each point puts round(fraction * count) samples
/// into train. Throws if either side would be empty for some point.
Split split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Min-max bounds from a training split.
struct NormStats {
    std::vector<double> feature_min;
    std::vector<double> feature_max;
    Point2D target_min;
    Point2D target_max;
};

NormStats compute_norm_stats(const Dataset& train);

/// (v - min) / (max - min); constant dimensions map to 0. Not clamped.
std::vector<double> normalize_features(std::span<const double> features, const NormStats& s);
Point2D normalize_target(Point2D t, const NormStats& s);
Point2D denormalize_target(Point2D t, const NormStats& s);

std::vector<neural::Sample> normalize(const Dataset& ds, const NormStats& s);

nlohmann::json norm_stats_to_json(const NormStats& s);
NormStats norm_stats_from_json(const nlohmann::json& j);

struct EvalReport {
    std::string model_family;
    std::string environment;
    Layout layout = Layout::hybrid;
    std::vector<double> per_point_mae_mm;  // indexed by point_id; NaN for absent points
    double overall_mae_mm = 0.0;
    std::size_t n = 0;
};

/// Position predictor working on raw features, returning meters.
using Predictor = std::function<Point2D(const MeasurementSample&)>;

/// Mean Euclidean error in millimetres. Throws on an empty test set.
EvalReport score(const Dataset& test, const Predictor& predict, std::string family);

/// Normalizes features, runs the model, denormalizes, scores.
EvalReport evaluate_mae(const neural::Model& model, const Dataset& test, const NormStats& stats);

/// Closed-form baselines on raw features.
Predictor trilateration_predictor(const Environment& env, const std::array<PathLossParams, 3>& params);
Predictor hybrid_predictor(const Environment& env, const std::array<PathLossParams, 3>& params);

/// 100 * (trilat - hybrid) / trilat
double improvement_percent(double mae_rssi_mm, double mae_hybrid_mm);

nlohmann::json eval_report_to_json(const EvalReport& r);

void write_dataset_csv(std::ostream& os, const Dataset& ds);
Dataset read_dataset_csv(std::istream& is);

// ---------------------------------------------------------------------------
// Experiments

struct EnvironmentSetup {
    Environment env;
    ChannelProfile channel;
};

struct TrainSettings {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::size_t iterations = 0;  // overrides epochs when > 0

    std::size_t steps_for(std::size_t train_size) const noexcept;
};

struct ExperimentConfig {
    std::vector<EnvironmentSetup> environments;
    std::size_t n_per_point = 500;
    double train_fraction = 0.8;
    std::vector<neural::Family> models{neural::Family::mlp, neural::Family::rbf, neural::Family::cnn};
    std::vector<Layout> layouts{Layout::rssi, Layout::hybrid};
    std::vector<std::uint64_t> seeds{1};
    TrainSettings train{};
    neural::ModelShape shape{};
    double rssi_threshold_sigmas = 3.0;
    double aoa_threshold_deg = 10.0;
    std::size_t loss_log_stride = 50;
    std::size_t calibration_samples = 200;  // per anchor
    std::size_t threads = 0;  // 0: LOCUS_THREADS or hardware concurrency
};

/// Parses the JSON experiment document (see README for the schema).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);

struct CellResult {
    std::string environment;
    neural::Family family = neural::Family::mlp;
    Layout layout = Layout::hybrid;
    std::uint64_t seed = 0;
    double mae_mm = 0.0;
    double untrained_mae_mm = 0.0;
    std::vector<double> per_point_mae_mm;
    std::vector<double> loss_history;  // window means, loss_log_stride steps each
    std::size_t steps = 0;
};

struct BaselineResult {
    std::string environment;
    std::string method;  // "trilat" or "hybrid"
    std::uint64_t seed = 0;
    double mae_mm = 0.0;
};

struct DatasetStats {
    std::string environment;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::size_t rejections = 0;
    std::array<PathLossParams, 3> calibrated{};
};

struct ExperimentReport {
    std::vector<std::string> environments;
    std::vector<neural::Family> models;
    std::vector<Layout> layouts;
    std::vector<std::uint64_t> seeds;
    std::size_t loss_log_stride = 1;
    std::vector<CellResult> cells;
    std::vector<BaselineResult> baselines;
    std::vector<DatasetStats> datasets;

    /// Seed-averaged trained MAE; NaN when the cell was not run.
    double mean_mae(std::string_view env, neural::Family f, Layout l) const;
    double mean_untrained_mae(std::string_view env, neural::Family f, Layout l) const;
    double mean_baseline(std::string_view env, std::string_view method) const;
    /// improvement_percent of the seed-averaged MAEs.
    double improvement(std::string_view env, neural::Family f) const;
};

/// Runs generate -> split -> normalize -> train -> evaluate for every
/// environment x seed x family x layout. The result does not depend on the
/// thread count.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ExperimentReport& r);
std::string mae_table_csv(const ExperimentReport& r);
std::string improvement_table_csv(const ExperimentReport& r);
std::string loss_history_csv(const ExperimentReport& r);

/// Writes report.json, mae_table.csv, improvement_table.csv, loss_history.csv.
void write_report(const ExperimentReport& r, const std::filesystem::path& dir);

/// Deterministic child seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) noexcept;

}  // namespace locus::pipeline
