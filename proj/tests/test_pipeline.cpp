#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "locus/hybrid.hpp"
#include "locus/io.hpp"
#include "locus/pipeline.hpp"
#include "support.hpp"

using namespace locus;
using namespace locus::pipeline;

namespace {

ChannelProfile quiet_channel(double sigma) {
    ChannelProfile c;
    c.path_loss.fill(PathLossParams{2.5, sigma, -40.0, 1.0});
    c.aoa_noise_deg = 0.0;
    return c;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

nlohmann::json small_config() {
    return nlohmann::json::parse(R"({
      "path_loss_profiles": {"indoor": {"gamma": 2.5, "sigma_db": 3.0, "p_r_d0_dbm": -40.0, "d0_m": 1.0}},
      "nlos_profiles": {"mild": {"excess_loss_db": 1.0, "aoa_bias_deg_sigma": 1.0}},
      "environments": [
        {"name": "corridor", "length_m": 12.0, "width_m": 4.0, "path_loss": "indoor", "nlos": "mild"},
        {"name": "small_classroom", "length_m": 9.0, "width_m": 7.0, "test_point_count": 6, "path_loss": "indoor"}
      ],
      "n_per_point": 60,
      "models": ["mlp", "rbf", "cnn"],
      "layouts": ["rssi", "hybrid"],
      "seeds": [3, 4],
      "train": {"learning_rate": 0.05, "batch_size": 32, "iterations": 150},
      "model_shape": {"hidden": 8, "filters": 4, "rbf_centers": 12},
      "loss_log_stride": 25
    })");
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("layout and mode names") {
    CHECK(parse_layout("rssi") == Layout::rssi);
    CHECK(parse_layout("hybrid") == Layout::hybrid);
    CHECK(layout_name(Layout::hybrid) == "hybrid");
    CHECK(feature_width(Layout::rssi) == 3);
    CHECK(feature_width(Layout::hybrid) == 6);
    CHECK_THROWS(parse_layout("aoa"));
    CHECK(parse_aoa_mode("music") == AoaMode::music);
    CHECK_THROWS(parse_aoa_mode("esprit"));
}

TEST_CASE("outlier screen boundaries") {
    const OutlierPolicy p = OutlierPolicy::from_sigma({PathLossParams{2, 3, -40, 1}, PathLossParams{2, 2, -40, 1},
                                                       PathLossParams{2, 1, -40, 1}});
    CHECK(p.rssi_threshold_db[0] == 9.0);
    CHECK(p.rssi_threshold_db[2] == 3.0);
    const std::vector<double> theory{-50, -60, -55, 10, 175, -80};
    CHECK(screen_outlier(theory, theory, p) == Screen::accept);

    auto m = theory;
    m[1] = -60 - 6.1;
    CHECK(screen_outlier(theory, m, p) == Screen::reject);
    m[1] = -60 + 5.9;
    CHECK(screen_outlier(theory, m, p) == Screen::accept);

    m = theory;
    m[4] = -172.0;  // 13 degrees away across the wrap
    CHECK(screen_outlier(theory, m, p) == Screen::reject);
    m[4] = -178.0;
    CHECK(screen_outlier(theory, m, p) == Screen::accept);

    CHECK_THROWS(screen_outlier(theory, std::vector<double>{1, 2, 3}, p));
}

TEST_CASE("noise-free datasets equal the theory") {
    const Environment env = small_classroom();
    const ChannelProfile c = quiet_channel(0.0);
    const OutlierPolicy policy = OutlierPolicy::from_sigma(c.path_loss);
    const Dataset ds = generate_dataset(env, c, 7, Layout::hybrid, policy, 1);
    CHECK(ds.rejections == 0);
    REQUIRE(ds.samples.size() == 70);
    for (const auto& s : ds.samples) {
        const auto t = theoretical_features(env, c.path_loss, s.target, Layout::hybrid);
        CHECK(test::max_abs_diff(s.features, t) == 0.0);
        CHECK(s.target == env.test_points()[s.point_id]);
    }
}

TEST_CASE("theoretical AoA features stay continuous around the array boresight") {
    const Environment env = big_classroom();
    const ChannelProfile c = quiet_channel(0.0);
    for (const Point2D& p : env.test_points()) {
        const auto f = theoretical_features(env, c.path_loss, p, Layout::hybrid);
        for (int a = 1; a <= 3; ++a) {
            const double th = f[static_cast<std::size_t>(2 + a)];
            CHECK(std::abs(th - env.boresight_deg(a)) < 90.0);
            CHECK(std::abs(wrap_degrees(th - true_aoa(env, a, p))) < 1e-9);
        }
    }
}

TEST_CASE("dataset size, determinism and seeds") {
    const Environment env = big_classroom();
    ChannelProfile c = quiet_channel(3.0);
    c.nlos = {2.0, 2.0, 0.0};
    c.aoa_noise_deg = 2.0;
    const OutlierPolicy policy = OutlierPolicy::from_sigma(c.path_loss);
    const Dataset a = generate_dataset(env, c, 500, Layout::hybrid, policy, 11);
    const Dataset b = generate_dataset(env, c, 500, Layout::hybrid, policy, 11);
    const Dataset d = generate_dataset(env, c, 500, Layout::hybrid, policy, 12);
    CHECK(a.samples.size() == 5000);
    std::ostringstream sa, sb, sd;
    write_dataset_csv(sa, a);
    write_dataset_csv(sb, b);
    write_dataset_csv(sd, d);
    CHECK(sa.str() == sb.str());
    CHECK(sa.str() != sd.str());
    CHECK(a.rejections == b.rejections);
}

TEST_CASE("rejection rate follows the Gaussian tail") {
    const Environment env = corridor();
    const ChannelProfile c = quiet_channel(3.0);
    const OutlierPolicy policy = OutlierPolicy::from_sigma(c.path_loss, 3.0);
    const Dataset ds = generate_dataset(env, c, 3000, Layout::rssi, policy, 5);
    const double inside = 2.0 * normal_cdf(3.0) - 1.0;
    const double expect = 1.0 - inside * inside * inside;
    const double draws = static_cast<double>(ds.samples.size() + ds.rejections);
    const double rate = static_cast<double>(ds.rejections) / draws;
    const double se = std::sqrt(expect * (1.0 - expect) / draws);
    CHECK(std::abs(rate - expect) < 4.0 * se);
}

TEST_CASE("a policy tighter than the noise hits the redraw cap") {
    const ChannelProfile c = quiet_channel(3.0);
    OutlierPolicy policy = OutlierPolicy::from_sigma(c.path_loss, 0.001);
    CHECK_THROWS_AS(generate_dataset(corridor(), c, 5, Layout::rssi, policy, 1), std::runtime_error);
    CHECK_THROWS(generate_dataset(corridor(), c, 0, Layout::rssi, policy, 1));
}

TEST_CASE("MUSIC mode agrees with ground truth on average") {
    const Environment env = small_classroom();
    ChannelProfile c = quiet_channel(0.0);
    c.aoa_mode = AoaMode::music;
    c.music.array.snapshots = 64;
    c.music.snr_db = 25.0;
    const Dataset ds = generate_dataset(env, c, 4, Layout::hybrid, OutlierPolicy::from_sigma(c.path_loss), 2);
    double worst = 0.0;
    for (const auto& s : ds.samples)
        for (int a = 1; a <= 3; ++a)
            worst = std::max(worst, std::abs(wrap_degrees(s.features[static_cast<std::size_t>(2 + a)] - true_aoa(env, a, s.target))));
    CHECK(worst < 3.0);
}

TEST_CASE("calibration absorbs the mean NLoS loss") {
    const Environment env = big_classroom();
    ChannelProfile c = quiet_channel(3.0);
    c.nlos = {4.0, 0.0, 0.0};
    const auto fitted = calibrate_channel(env, c, 4000, 9);
    for (const auto& p : fitted) {
        CHECK(std::abs(p.gamma - 2.5) < 0.15);
        CHECK(std::abs(p.p_r_d0 - (-44.0)) < 0.5);
        CHECK(std::abs(p.sigma - 3.0) < 0.15);
        CHECK(p.d0 == 1.0);
    }
    CHECK_THROWS(calibrate_channel(env, c, 2, 1));
}

TEST_CASE("split is stratified and exhaustive") {
    const Environment env = big_classroom();
    const ChannelProfile c = quiet_channel(3.0);
    const Dataset ds = generate_dataset(env, c, 500, Layout::rssi, OutlierPolicy::from_sigma(c.path_loss), 3);
    const Split sp = split(ds, 0.8, 4);
    std::map<std::size_t, int> tr, te;
    for (const auto& s : sp.train.samples) ++tr[s.point_id];
    for (const auto& s : sp.test.samples) ++te[s.point_id];
    REQUIRE(tr.size() == 10);
    for (std::size_t p = 0; p < 10; ++p) {
        CHECK(tr[p] == 400);
        CHECK(te[p] == 100);
    }

    std::vector<double> all, parts;
    for (const auto& s : ds.samples) all.push_back(s.features[0] * 1e3 + static_cast<double>(s.point_id));
    for (const auto* part : {&sp.train, &sp.test})
        for (const auto& s : part->samples) parts.push_back(s.features[0] * 1e3 + static_cast<double>(s.point_id));
    std::sort(all.begin(), all.end());
    std::sort(parts.begin(), parts.end());
    CHECK(all == parts);

    const Split again = split(ds, 0.8, 4);
    CHECK(again.test.samples.front().features == sp.test.samples.front().features);
}

TEST_CASE("split edge cases") {
    const ChannelProfile c = quiet_channel(1.0);
    const Dataset two = generate_dataset(corridor(), c, 2, Layout::rssi, OutlierPolicy::from_sigma(c.path_loss), 1);
    const Split half = split(two, 0.5, 1);
    CHECK(half.train.samples.size() == 10);
    CHECK(half.test.samples.size() == 10);
    CHECK_THROWS(split(two, 0.1, 1));
    CHECK_THROWS(split(two, 0.0, 1));
    CHECK_THROWS(split(two, 1.0, 1));
}

TEST_CASE("normalization bounds and round trip") {
    Dataset train;
    train.layout = Layout::rssi;
    train.samples = {{{-70, -50, -60}, {1, 2}, 0}, {{-40, -50, -30}, {5, 9}, 1}};
    const NormStats s = compute_norm_stats(train);
    CHECK(normalize_features(std::vector<double>{-70, -50, -60}, s) == std::vector<double>{0, 0, 0});
    CHECK(normalize_features(std::vector<double>{-40, -50, -30}, s) == std::vector<double>{1, 0, 1});
    const auto outside = normalize_features(std::vector<double>{-80, -50, -20}, s);
    CHECK(outside[0] < 0.0);
    CHECK(outside[2] > 1.0);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-20.0, 20.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Point2D t{u(rng), u(rng)};
        worst = std::max(worst, test::gap(denormalize_target(normalize_target(t, s), s), t));
    }
    CHECK(worst < 1e-12);

    const NormStats back = norm_stats_from_json(norm_stats_to_json(s));
    CHECK(back.feature_min == s.feature_min);
    CHECK(back.target_max == s.target_max);
    CHECK_THROWS(compute_norm_stats(Dataset{}));
}

TEST_CASE("score against direct summation") {
    const Environment env = corridor();
    const ChannelProfile c = quiet_channel(2.0);
    const Dataset ds = generate_dataset(env, c, 20, Layout::rssi, OutlierPolicy::from_sigma(c.path_loss), 6);

    CHECK(score(ds, [](const MeasurementSample& s) { return s.target; }, "oracle").overall_mae_mm == 0.0);

    const EvalReport shifted = score(ds, [](const MeasurementSample& s) { return Point2D{s.target.x + 0.1, s.target.y}; }, "shift");
    CHECK(shifted.overall_mae_mm == doctest::Approx(100.0).epsilon(1e-12));
    for (double v : shifted.per_point_mae_mm) CHECK(v == doctest::Approx(100.0).epsilon(1e-12));

    Point2D centroid{0, 0};
    for (const auto& s : ds.samples) {
        centroid.x += s.target.x;
        centroid.y += s.target.y;
    }
    centroid.x /= static_cast<double>(ds.samples.size());
    centroid.y /= static_cast<double>(ds.samples.size());
    double brute = 0.0;
    for (const auto& s : ds.samples) brute += std::hypot(s.target.x - centroid.x, s.target.y - centroid.y);
    brute = 1000.0 * brute / static_cast<double>(ds.samples.size());
    CHECK(score(ds, [&](const MeasurementSample&) { return centroid; }, "mean").overall_mae_mm == doctest::Approx(brute).epsilon(1e-12));
    CHECK_THROWS(score(Dataset{}, [](const MeasurementSample& s) { return s.target; }, "x"));
}

TEST_CASE("fused hybrid baseline is no worse than the worst single anchor") {
    const Environment env = big_classroom();
    ChannelProfile c = quiet_channel(3.0);
    c.aoa_noise_deg = 3.0;
    const Dataset ds = generate_dataset(env, c, 100, Layout::hybrid, OutlierPolicy::from_sigma(c.path_loss), 8);
    const double fused = score(ds, hybrid_predictor(env, c.path_loss), "hybrid").overall_mae_mm;
    double worst = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Predictor single = [&, a](const MeasurementSample& s) {
            DistanceVector d;
            for (std::size_t i = 0; i < 3; ++i) d.d[i] = rssi_to_distance(c.path_loss[i], s.features[i]);
            return anchor_estimates(env, d, {s.features[3], s.features[4], s.features[5]})[static_cast<std::size_t>(a)].p;
        };
        worst = std::max(worst, score(ds, single, "single").overall_mae_mm);
    }
    CHECK(fused <= worst);
}

TEST_CASE("more shadowing never helps closed-form trilateration") {
    const Environment env = small_classroom();
    std::vector<double> lo, hi;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (double sigma : {2.0, 4.0}) {
            const ChannelProfile c = quiet_channel(sigma);
            const Dataset ds = generate_dataset(env, c, 50, Layout::rssi, OutlierPolicy::from_sigma(c.path_loss), seed);
            (sigma == 2.0 ? lo : hi).push_back(score(ds, trilateration_predictor(env, c.path_loss), "t").overall_mae_mm);
        }
    }
    CHECK(median(hi) >= median(lo));
}

TEST_CASE("dataset CSV round trip") {
    const ChannelProfile c = quiet_channel(2.0);
    for (Layout l : {Layout::rssi, Layout::hybrid}) {
        const Dataset ds = generate_dataset(corridor(), c, 3, l, OutlierPolicy::from_sigma(c.path_loss), 2);
        std::stringstream ss;
        write_dataset_csv(ss, ds);
        const Dataset back = read_dataset_csv(ss);
        CHECK(back.layout == l);
        REQUIRE(back.samples.size() == ds.samples.size());
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            CHECK(back.samples[i].point_id == ds.samples[i].point_id);
            CHECK(test::max_abs_diff(back.samples[i].features, ds.samples[i].features) < 1e-12);
            CHECK(test::gap(back.samples[i].target, ds.samples[i].target) < 1e-12);
        }
    }
}

TEST_CASE("projecting to RSSI keeps the same draws") {
    const ChannelProfile c = quiet_channel(2.0);
    const Dataset h = generate_dataset(corridor(), c, 4, Layout::hybrid, OutlierPolicy::from_sigma(c.path_loss), 2);
    const Dataset r = project_layout(h, Layout::rssi);
    REQUIRE(r.samples.size() == h.samples.size());
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        REQUIRE(r.samples[i].features.size() == 3);
        for (std::size_t k = 0; k < 3; ++k) CHECK(r.samples[i].features[k] == h.samples[i].features[k]);
    }
    CHECK_THROWS(project_layout(r, Layout::hybrid));
}

TEST_CASE("improvement percentage") {
    CHECK(improvement_percent(1000.0, 400.0) == doctest::Approx(60.0));
    CHECK(improvement_percent(500.0, 600.0) == doctest::Approx(-20.0));
}

TEST_CASE("derived seeds are distinct and stable") {
    CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
    CHECK(derive_seed(1, 0, 1) != derive_seed(2, 0, 1));
    CHECK(derive_seed(1, 0, 1) != derive_seed(1, 0, 2));
}

TEST_CASE("config parsing") {
    const ExperimentConfig cfg = experiment_config_from_json(small_config());
    REQUIRE(cfg.environments.size() == 2);
    CHECK(cfg.environments[0].env.test_points().size() == 10);
    CHECK(cfg.environments[1].env.test_points().size() == 6);
    CHECK(cfg.environments[0].channel.nlos.excess_loss_db == 1.0);
    CHECK(cfg.environments[1].channel.nlos.excess_loss_db == 0.0);
    CHECK(cfg.environments[0].channel.path_loss[2].gamma == 2.5);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK(cfg.train.iterations == 150);
    CHECK(cfg.shape.hidden == 8);

    auto bad = small_config();
    bad["environments"][0]["path_loss"] = "outdoor";
    CHECK_THROWS(experiment_config_from_json(bad));
    bad = small_config();
    bad["models"] = nlohmann::json::array();
    CHECK_THROWS(experiment_config_from_json(bad));
    bad = small_config();
    bad.erase("environments");
    CHECK_THROWS(experiment_config_from_json(bad));

    auto counted = small_config();
    counted["seeds"] = 3;
    CHECK(experiment_config_from_json(counted).seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("experiments are reproducible and thread-count independent") {
    ExperimentConfig cfg = experiment_config_from_json(small_config());
    cfg.threads = 1;
    const ExperimentReport a = run_experiment(cfg);
    cfg.threads = 3;
    const ExperimentReport b = run_experiment(cfg);
    CHECK(io::dump_fixed(report_to_json(a)) == io::dump_fixed(report_to_json(b)));
    CHECK(mae_table_csv(a) == mae_table_csv(b));
    CHECK(loss_history_csv(a) == loss_history_csv(b));

    CHECK(a.cells.size() == 2 * 2 * 3 * 2);
    for (const auto& c : a.cells) {
        CHECK(c.mae_mm > 0.0);
        CHECK(std::isfinite(c.untrained_mae_mm));
    }
    for (const auto& d : a.datasets) CHECK(d.samples == (d.environment == "corridor" ? 600u : 360u));

    const std::string table = mae_table_csv(a);
    CHECK(table.rfind("environment,mlp_rssi,mlp_hybrid,rbf_rssi,rbf_hybrid,cnn_rssi,cnn_hybrid\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);
}

TEST_CASE("zero-noise experiment is nearly exact") {
    auto j = small_config();
    j["path_loss_profiles"]["indoor"]["sigma_db"] = 0.0;
    j["nlos_profiles"]["mild"] = {{"excess_loss_db", 0.0}, {"aoa_bias_deg_sigma", 0.0}};
    j["aoa_noise_deg"] = 0.0;
    j["n_per_point"] = 20;
    j["seeds"] = {1};
    for (auto& e : j["environments"]) e["test_point_count"] = 5;
    j["train"] = {{"learning_rate", 0.2}, {"batch_size", 10}, {"iterations", 100000}};
    j["model_shape"] = {{"rbf_centers", 12}};
    const ExperimentReport r = run_experiment(experiment_config_from_json(j));
    for (const auto& c : r.cells) CHECK_MESSAGE(c.mae_mm < 10.0, c.environment, " ", neural::family_name(c.family), " ", layout_name(c.layout));
    for (const auto& b : r.baselines) CHECK(b.mae_mm < 10.0);
    for (const auto& d : r.datasets) CHECK(d.rejections == 0);
}

TEST_CASE("hybrid features beat RSSI-only on a paired run") {
    auto j = small_config();
    j["environments"] = nlohmann::json::array({j["environments"][0]});
    j["n_per_point"] = 200;
    j["seeds"] = {1, 2};
    j["models"] = {"mlp", "rbf"};
    j["train"] = {{"learning_rate", 0.01}, {"batch_size", 32}, {"epochs", 100}};
    j["model_shape"] = nlohmann::json::object();
    const ExperimentReport r = run_experiment(experiment_config_from_json(j));
    for (auto f : r.models) CHECK(r.improvement("corridor", f) > 0.0);
}

TEST_CASE("report files") {
    ExperimentConfig cfg = experiment_config_from_json(small_config());
    cfg.seeds = {1};
    cfg.environments.erase(cfg.environments.begin() + 1, cfg.environments.end());
    const ExperimentReport r = run_experiment(cfg);
    const std::filesystem::path dir = std::filesystem::path(LOCUS_TEST_TMP) / "pipeline_report";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    write_report(r, dir);
    for (const char* f : {"report.json", "mae_table.csv", "improvement_table.csv", "loss_history.csv"})
        CHECK(std::filesystem::exists(dir / f));
    const nlohmann::json j = io::read_json_file(dir / "report.json");
    CHECK(j.at("environments").size() == 1);
    CHECK(j.at("datasets").at(0).at("calibrated_path_loss").size() == 3);
    const std::string loss = io::read_text_file(dir / "loss_history.csv");
    CHECK(loss.rfind("environment,", 0) == 0);
}

}  // TEST_SUITE
