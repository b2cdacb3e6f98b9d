#include "commands.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "locus/aoa.hpp"
#include "locus/channel.hpp"
#include "locus/environment.hpp"
#include "locus/hybrid.hpp"
#include "locus/io.hpp"
#include "locus/neural.hpp"
#include "locus/pipeline.hpp"
#include "locus/plfit.hpp"
#include "locus/trilat.hpp"

namespace locus::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Common {
    std::uint64_t seed = 1;
    std::string format = "json";
};

struct Options {
    Common common;

    std::string input;
    std::string output;
    std::string env;
    std::string obs;
    std::string pathloss;
    std::string method = "trilat";
    std::string config;
    std::string model_path;
    std::string data;
    std::string family = "mlp";
    std::string layout = "hybrid";
    std::string spectrum_out;

    double d0 = 1.0;
    double gamma = 2.5;
    double sigma = 3.0;
    double p0 = -40.0;
    double d_min = 1.0;
    double d_max = 10.0;
    std::size_t count = 200;

    std::vector<double> thetas{0.0};
    double source_power_db = 0.0;
    double snr_db = 20.0;
    int elements = 8;
    double spacing = 0.5;
    int snapshots = 256;
    int k = 1;
    double step = 0.1;

    double excess_db = 0.0;
    double bias_deg = 0.0;
    double aoa_noise = 2.0;
    std::size_t n_per_point = 500;
    double outlier_sigmas = 3.0;
    double aoa_threshold = 10.0;

    double lr = 0.01;
    std::size_t batch = 32;
    std::size_t epochs = 200;
    std::size_t iterations = 0;
    std::size_t threads = 0;
};

Options& opts() {
    static Options o;
    return o;
}

std::map<const CLI::App*, std::function<void()>>& actions() {
    static std::map<const CLI::App*, std::function<void()>> a;
    return a;
}

void usage_error(const std::string& msg) { throw CLI::ValidationError(msg); }

void add_common(CLI::App* sub, bool with_format) {
    sub->add_option("--seed", opts().common.seed, "Random seed")->capture_default_str();
    if (with_format)
        sub->add_option("--format", opts().common.format, "Output format")
            ->check(CLI::IsMember({"json", "csv"}))
            ->capture_default_str();
}

void emit(const json& j) { std::cout << io::dump_fixed(j) << '\n'; }

bool csv_output() { return opts().common.format == "csv"; }

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

Environment resolve_environment(const std::string& spec) {
    if (spec == "big_classroom") return big_classroom();
    if (spec == "corridor") return corridor();
    if (spec == "small_classroom") return small_classroom();
    return environment_from_json(io::read_json_file(spec));
}

std::array<PathLossParams, 3> resolve_path_loss(const std::string& path, const PathLossParams& fallback) {
    std::array<PathLossParams, 3> out{fallback, fallback, fallback};
    if (path.empty()) return out;
    const json j = io::read_json_file(path);
    if (j.is_array()) {
        if (j.size() != 3) throw std::invalid_argument("path-loss array must have 3 entries");
        for (std::size_t i = 0; i < 3; ++i) out[i] = path_loss_from_json(j[i]);
    } else {
        out.fill(path_loss_from_json(j));
    }
    return out;
}

PathLossParams flag_path_loss() {
    const Options& o = opts();
    PathLossParams p{o.gamma, o.sigma, o.p0, o.d0};
    p.validate();
    return p;
}

std::array<double, 3> triple(const json& j, const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument(std::string(key) + " needs 3 values");
    return {v[0], v[1], v[2]};
}

json point_json(Point2D p) { return {{"x_m", p.x}, {"y_m", p.y}}; }

pipeline::Dataset load_dataset(const std::string& path) {
    std::ifstream in = open_input(path);
    return pipeline::read_dataset_csv(in);
}

// fit -----------------------------------------------------------------------

void cmd_fit() {
    const Options& o = opts();
    std::ifstream in = open_input(o.input);
    const auto samples = read_fit_samples_csv(in);
    const FitResult r = fit_path_loss(samples, o.d0);
    if (csv_output()) {
        std::cout << "gamma,sigma_db,p_r_d0_dbm,d0_m,residual_rms_db,n\n"
                  << io::format_fixed(r.params.gamma) << ',' << io::format_fixed(r.params.sigma) << ','
                  << io::format_fixed(r.params.p_r_d0) << ',' << io::format_fixed(r.params.d0) << ','
                  << io::format_fixed(r.residual_rms) << ',' << r.n << '\n';
        return;
    }
    emit(fit_result_to_json(r));
}

// simulate ------------------------------------------------------------------

void cmd_simulate_pathloss() {
    const Options& o = opts();
    const PathLossParams p = flag_path_loss();
    if (!(o.d_min >= p.d0 && o.d_max > o.d_min)) usage_error("need d0 <= --dmin < --dmax");
    Rng rng(o.common.seed);
    std::uniform_real_distribution<double> span(o.d_min, o.d_max);
    const NlosModel nlos{o.excess_db, o.bias_deg, 0.0};
    nlos.validate();

    if (csv_output()) {
        std::cout << "d_m,rssi_dbm\n";
        for (std::size_t i = 0; i < o.count; ++i) {
            const double d = span(rng);
            const double r = apply_nlos(simulate_rssi(p, d, rng), 0.0, nlos, rng).first;
            std::cout << io::format_fixed(d) << ',' << io::format_fixed(r) << '\n';
        }
        return;
    }
    json rows = json::array();
    for (std::size_t i = 0; i < o.count; ++i) {
        const double d = span(rng);
        const double r = apply_nlos(simulate_rssi(p, d, rng), 0.0, nlos, rng).first;
        rows.push_back({{"d_m", d}, {"rssi_dbm", r}});
    }
    emit({{"params", path_loss_to_json(p)}, {"samples", rows}});
}

void cmd_simulate_snapshots() {
    const Options& o = opts();
    ArraySpec array{o.elements, o.spacing, o.snapshots};
    array.validate();
    std::vector<SourceSpec> sources;
    for (double t : o.thetas) sources.push_back({t, o.source_power_db});
    Rng rng(o.common.seed);
    const double noise_db = std::isinf(o.snr_db) && o.snr_db > 0 ? -std::numeric_limits<double>::infinity()
                                                                 : o.source_power_db - o.snr_db;
    const SnapshotMatrix x = simulate_snapshots(array, sources, noise_db, rng);
    if (o.output.empty()) {
        write_snapshots_csv(std::cout, x);
    } else {
        std::ofstream out(o.output);
        if (!out) throw std::runtime_error("cannot write " + o.output);
        write_snapshots_csv(out, x);
    }
}

void cmd_simulate_dataset() {
    const Options& o = opts();
    const Environment env = resolve_environment(o.env);
    pipeline::ChannelProfile channel;
    channel.path_loss = resolve_path_loss(o.pathloss, flag_path_loss());
    channel.nlos = {o.excess_db, o.bias_deg, 0.0};
    channel.aoa_noise_deg = o.aoa_noise;
    const auto policy = pipeline::OutlierPolicy::from_sigma(channel.path_loss, o.outlier_sigmas, o.aoa_threshold);
    const pipeline::Dataset ds =
        pipeline::generate_dataset(env, channel, o.n_per_point, pipeline::parse_layout(o.layout), policy, o.common.seed);
    if (o.output.empty()) {
        pipeline::write_dataset_csv(std::cout, ds);
    } else {
        std::ofstream out(o.output);
        if (!out) throw std::runtime_error("cannot write " + o.output);
        pipeline::write_dataset_csv(out, ds);
        emit({{"environment", ds.environment},
              {"samples", ds.samples.size()},
              {"rejections", ds.rejections},
              {"output", o.output}});
    }
}

// locate --------------------------------------------------------------------

void cmd_locate() {
    const Options& o = opts();
    const Environment env = resolve_environment(o.env);
    const json obs = io::read_json_file(o.obs);
    const auto params = resolve_path_loss(o.pathloss, PathLossParams{2.5, 3.0, -40.0, 1.0});

    DistanceVector d;
    const bool have_distances = obs.contains("distances_m");
    if (have_distances) {
        d.d = triple(obs, "distances_m");
    } else {
        const auto rssi = triple(obs, obs.contains("rssi") ? "rssi" : "rssi_dbm");
        for (std::size_t i = 0; i < 3; ++i) d.d[i] = rssi_to_distance(params[i], rssi[i]);
    }

    PositionEstimate est;
    if (o.method == "trilat") {
        est = trilaterate_distances(env.anchor_positions(), d);
    } else {
        if (!obs.contains("aoa_deg")) usage_error("hybrid locate needs aoa_deg in the observation");
        est = hybrid_position(env, d, triple(obs, "aoa_deg"));
    }

    if (csv_output()) {
        std::cout << "x_m,y_m,residual_m\n"
                  << io::format_fixed(est.p.x) << ',' << io::format_fixed(est.p.y) << ','
                  << io::format_fixed(est.residual) << '\n';
        return;
    }
    json out = point_json(est.p);
    out["residual_m"] = est.residual;
    out["method"] = o.method;
    out["distances_m"] = d.d;
    emit(out);
}

// aoa -----------------------------------------------------------------------

void cmd_aoa() {
    const Options& o = opts();
    std::ifstream in = open_input(o.input);
    const SnapshotMatrix x = read_snapshots_csv(in, o.spacing);
    if (o.k < 1 || o.k >= x.array.m) usage_error("--k must satisfy 1 <= k < elements");
    if (!(o.step > 0.0)) usage_error("--step must be positive");

    const EigenDecomposition e = eigendecompose(correlation_matrix(x));
    const SpatialSpectrum s = spatial_spectrum(noise_subspace(e, o.k), x.array, AngleGrid{-90.0, 90.0, o.step});
    const std::vector<double> angles = pick_peaks(s, o.k);

    if (!o.spectrum_out.empty()) {
        std::ofstream out(o.spectrum_out);
        if (!out) throw std::runtime_error("cannot write " + o.spectrum_out);
        out << "theta_deg,power\n";
        for (std::size_t i = 0; i < s.grid_deg.size(); ++i)
            out << io::format_fixed(s.grid_deg[i]) << ',' << io::format_fixed(s.power[i]) << '\n';
    }

    if (csv_output()) {
        std::cout << "theta_deg\n";
        for (double a : angles) std::cout << io::format_fixed(a) << '\n';
        return;
    }
    std::vector<double> eig(e.values.data(), e.values.data() + e.values.size());
    emit({{"angles_deg", angles}, {"eigenvalues", eig}, {"elements", x.array.m}, {"snapshots", x.data.cols()}});
}

// train / predict / eval ----------------------------------------------------

void cmd_train() {
    const Options& o = opts();
    const pipeline::Dataset ds = load_dataset(o.data);
    const pipeline::NormStats stats = pipeline::compute_norm_stats(ds);
    const auto samples = pipeline::normalize(ds, stats);
    const neural::Family f = neural::parse_family(o.family);
    const int width = static_cast<int>(pipeline::feature_width(ds.layout));

    neural::Model model = neural::make_model(f, width, samples, pipeline::derive_seed(o.common.seed, 10));
    std::size_t steps = 0;
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    if (f == neural::Family::rbf) {
        std::get<neural::RbfModel>(model).fit_output(samples);
        final_loss = neural::loss_and_gradients(model, samples).loss;
    } else {
        pipeline::TrainSettings ts{o.lr, o.batch, o.epochs, o.iterations};
        neural::TrainConfig tc{o.lr, o.batch, ts.steps_for(samples.size()), pipeline::derive_seed(o.common.seed, 20)};
        neural::TrainResult tr = neural::train(std::move(model), samples, tc);
        model = std::move(tr.model);
        steps = tc.iterations;
        final_loss = neural::loss_and_gradients(model, samples).loss;
    }

    const json extra = {{"layout", pipeline::layout_name(ds.layout)}, {"stats", pipeline::norm_stats_to_json(stats)}};
    io::write_text_file(o.output, io::dump_fixed(model_to_json(model, extra)) + "\n");
    emit({{"family", neural::family_name(f)},
          {"layout", pipeline::layout_name(ds.layout)},
          {"samples", samples.size()},
          {"steps", steps},
          {"train_loss", final_loss},
          {"output", o.output}});
}

struct LoadedModel {
    neural::Model model;
    pipeline::NormStats stats;
    pipeline::Layout layout;
};

LoadedModel load_model(const std::string& path) {
    const json j = io::read_json_file(path);
    if (!j.contains("normalization") || j["normalization"].is_null())
        throw std::runtime_error(path + " carries no normalization statistics");
    const json& n = j["normalization"];
    return {neural::model_from_json(j), pipeline::norm_stats_from_json(n.at("stats")),
            pipeline::parse_layout(n.at("layout").get<std::string>())};
}

pipeline::Dataset matching_layout(const pipeline::Dataset& ds, pipeline::Layout layout) {
    if (ds.layout == layout) return ds;
    if (layout == pipeline::Layout::rssi) return pipeline::project_layout(ds, layout);
    throw std::runtime_error("model expects AoA columns the data does not have");
}

void cmd_predict() {
    const Options& o = opts();
    const LoadedModel m = load_model(o.model_path);
    const pipeline::Dataset ds = matching_layout(load_dataset(o.data), m.layout);

    std::vector<Point2D> preds;
    preds.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        const auto x = pipeline::normalize_features(s.features, m.stats);
        preds.push_back(pipeline::denormalize_target(neural::forward(m.model, x), m.stats));
    }

    if (csv_output()) {
        std::cout << "point_id,x_m,y_m\n";
        for (std::size_t i = 0; i < preds.size(); ++i)
            std::cout << ds.samples[i].point_id << ',' << io::format_fixed(preds[i].x) << ','
                      << io::format_fixed(preds[i].y) << '\n';
        return;
    }
    json rows = json::array();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        json r = point_json(preds[i]);
        r["point_id"] = ds.samples[i].point_id;
        rows.push_back(r);
    }
    emit({{"predictions", rows}});
}

void cmd_eval() {
    const Options& o = opts();
    const LoadedModel m = load_model(o.model_path);
    const pipeline::Dataset ds = matching_layout(load_dataset(o.data), m.layout);
    const pipeline::EvalReport r = pipeline::evaluate_mae(m.model, ds, m.stats);
    if (csv_output()) {
        std::cout << "point_id,mae_mm\n";
        for (std::size_t i = 0; i < r.per_point_mae_mm.size(); ++i)
            std::cout << i << ',' << io::format_fixed(r.per_point_mae_mm[i]) << '\n';
        std::cout << "all," << io::format_fixed(r.overall_mae_mm) << '\n';
        return;
    }
    emit(pipeline::eval_report_to_json(r));
}

// report --------------------------------------------------------------------

void cmd_report(const CLI::App* sub) {
    const Options& o = opts();
    pipeline::ExperimentConfig cfg = pipeline::experiment_config_from_json(io::read_json_file(o.config));
    if (sub->count("--seed") > 0) cfg.seeds = {o.common.seed};
    if (o.threads > 0) cfg.threads = o.threads;

    const pipeline::ExperimentReport r = pipeline::run_experiment(cfg);
    fs::create_directories(o.output);
    pipeline::write_report(r, o.output);

    if (csv_output()) {
        std::cout << pipeline::mae_table_csv(r);
        return;
    }
    const json full = pipeline::report_to_json(r);
    emit({{"out", o.output},
          {"mae_table_mm", full.at("mae_table_mm")},
          {"improvement_percent", full.at("improvement_percent")}});
}

}  // namespace

void register_commands(CLI::App& app) {
    Options& o = opts();
    auto bind = [](CLI::App* sub, std::function<void()> fn) { actions()[sub] = std::move(fn); };

    auto* fit = app.add_subcommand("fit", "Fit a log-distance path-loss model to d_m,rssi_dbm samples");
    fit->add_option("--input", o.input, "CSV of distance/RSSI samples")->required()->check(CLI::ExistingFile);
    fit->add_option("--d0", o.d0, "Reference distance in metres")->capture_default_str();
    add_common(fit, true);
    bind(fit, cmd_fit);

    auto* sim = app.add_subcommand("simulate", "Generate synthetic measurements");
    sim->require_subcommand(1);

    auto* pl = sim->add_subcommand("pathloss", "Distance sweep through the log-distance channel");
    pl->add_option("--gamma", o.gamma)->capture_default_str();
    pl->add_option("--sigma", o.sigma, "Shadowing std in dB")->capture_default_str();
    pl->add_option("--p0", o.p0, "RSSI at d0 in dBm")->capture_default_str();
    pl->add_option("--d0", o.d0)->capture_default_str();
    pl->add_option("--dmin", o.d_min)->capture_default_str();
    pl->add_option("--dmax", o.d_max)->capture_default_str();
    pl->add_option("--count", o.count)->capture_default_str();
    pl->add_option("--nlos-excess", o.excess_db, "Extra attenuation in dB")->capture_default_str();
    add_common(pl, true);
    bind(pl, cmd_simulate_pathloss);

    auto* snap = sim->add_subcommand("snapshots", "Complex baseband snapshots on a uniform linear array");
    snap->add_option("--theta", o.thetas, "Source angles in degrees")->capture_default_str();
    snap->add_option("--power", o.source_power_db, "Source power in dB")->capture_default_str();
    snap->add_option("--snr", o.snr_db, "Per-element SNR in dB (inf for noiseless)")->capture_default_str();
    snap->add_option("--elements", o.elements)->capture_default_str();
    snap->add_option("--spacing", o.spacing, "Element spacing in wavelengths")->capture_default_str();
    snap->add_option("--snapshots", o.snapshots)->capture_default_str();
    snap->add_option("--out", o.output, "Output CSV (stdout when omitted)");
    add_common(snap, false);
    bind(snap, cmd_simulate_snapshots);

    auto* data = sim->add_subcommand("dataset", "Screened RSSI/AoA samples for every test point of a room");
    data->add_option("--env", o.env, "Room name or environment JSON")->required();
    data->add_option("--pathloss", o.pathloss, "Path-loss JSON (one object or three)");
    data->add_option("--gamma", o.gamma)->capture_default_str();
    data->add_option("--sigma", o.sigma)->capture_default_str();
    data->add_option("--p0", o.p0)->capture_default_str();
    data->add_option("--nlos-excess", o.excess_db)->capture_default_str();
    data->add_option("--nlos-bias", o.bias_deg, "AoA bias std in degrees")->capture_default_str();
    data->add_option("--aoa-noise", o.aoa_noise, "AoA estimation noise std in degrees")->capture_default_str();
    data->add_option("--n-per-point", o.n_per_point)->capture_default_str();
    data->add_option("--layout", o.layout)->check(CLI::IsMember({"rssi", "hybrid"}))->capture_default_str();
    data->add_option("--out", o.output, "Output CSV (stdout when omitted)");
    add_common(data, false);
    bind(data, cmd_simulate_dataset);

    auto* loc = app.add_subcommand("locate", "Closed-form position from one observation");
    loc->add_option("--method", o.method)->check(CLI::IsMember({"trilat", "hybrid"}))->capture_default_str();
    loc->add_option("--env", o.env, "Room name or environment JSON")->required();
    loc->add_option("--obs", o.obs, "Observation JSON")->required()->check(CLI::ExistingFile);
    loc->add_option("--pathloss", o.pathloss, "Path-loss JSON (one object or three)");
    add_common(loc, true);
    bind(loc, cmd_locate);

    auto* aoa = app.add_subcommand("aoa", "MUSIC angle estimation from a snapshot CSV");
    aoa->add_option("--input", o.input)->required()->check(CLI::ExistingFile);
    aoa->add_option("--k", o.k, "Number of sources")->capture_default_str();
    aoa->add_option("--step", o.step, "Grid step in degrees")->capture_default_str();
    aoa->add_option("--spacing", o.spacing)->capture_default_str();
    aoa->add_option("--spectrum", o.spectrum_out, "Write the spatial spectrum to this CSV");
    add_common(aoa, true);
    bind(aoa, cmd_aoa);

    auto* tr = app.add_subcommand("train", "Train a model on a dataset CSV");
    tr->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
    tr->add_option("--model", o.family)->check(CLI::IsMember({"mlp", "bpnn", "rbf", "cnn"}))->capture_default_str();
    tr->add_option("--out", o.output, "Model JSON")->required();
    tr->add_option("--lr", o.lr)->capture_default_str();
    tr->add_option("--batch", o.batch)->capture_default_str();
    tr->add_option("--epochs", o.epochs)->capture_default_str();
    tr->add_option("--iterations", o.iterations, "Overrides --epochs when positive")->capture_default_str();
    add_common(tr, false);
    bind(tr, cmd_train);

    auto* pr = app.add_subcommand("predict", "Predict positions with a trained model");
    pr->add_option("--model", o.model_path)->required()->check(CLI::ExistingFile);
    pr->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
    add_common(pr, true);
    bind(pr, cmd_predict);

    auto* ev = app.add_subcommand("eval", "Per-point MAE of a trained model");
    ev->add_option("--model", o.model_path)->required()->check(CLI::ExistingFile);
    ev->add_option("--data", o.data)->required()->check(CLI::ExistingFile);
    add_common(ev, true);
    bind(ev, cmd_eval);

    auto* rep = app.add_subcommand("report", "Run a full experiment and write its tables");
    rep->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
    rep->add_option("--out", o.output, "Output directory")->required();
    rep->add_option("--threads", o.threads, "Worker threads (0: LOCUS_THREADS or all cores)");
    add_common(rep, true);
    bind(rep, [rep] { cmd_report(rep); });
}

void run_selected(CLI::App& app) {
    CLI::App* sub = app.get_subcommands().front();
    while (!sub->get_subcommands().empty()) sub = sub->get_subcommands().front();
    const auto it = actions().find(sub);
    if (it == actions().end()) throw CLI::CallForHelp();
    it->second();
}

}  // namespace locus::cli
