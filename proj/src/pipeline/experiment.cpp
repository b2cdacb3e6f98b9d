#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include "locus/io.hpp"
#include "locus/pipeline.hpp"
#include "locus/plfit.hpp"

namespace locus::pipeline {

namespace {

struct UnitResult {
    std::vector<CellResult> cells;
    std::vector<BaselineResult> baselines;
    DatasetStats stats;
};

std::vector<double> window_means(const std::vector<double>& history, std::size_t stride) {
    std::vector<double> out;
    for (std::size_t start = 0; start < history.size(); start += stride) {
        const std::size_t end = std::min(start + stride, history.size());
        double s = 0.0;
        for (std::size_t i = start; i < end; ++i) s += history[i];
        out.push_back(s / static_cast<double>(end - start));
    }
    return out;
}

UnitResult run_unit(const ExperimentConfig& cfg, std::size_t env_index, std::uint64_t seed) {
    const EnvironmentSetup& setup = cfg.environments[env_index];
    const Environment& env = setup.env;
    ChannelProfile channel = setup.channel;
    channel.reference = calibrate_channel(env, channel, cfg.calibration_samples, derive_seed(seed, env_index, 3));
    const auto& fitted = *channel.reference;
    const OutlierPolicy policy = OutlierPolicy::from_sigma(fitted, cfg.rssi_threshold_sigmas, cfg.aoa_threshold_deg);

    // One set of channel draws feeds both layouts.
    const Dataset ds = generate_dataset(env, channel, cfg.n_per_point, Layout::hybrid, policy,
                                        derive_seed(seed, env_index, 1));
    const Split sp = split(ds, cfg.train_fraction, derive_seed(seed, env_index, 2));

    UnitResult out;
    out.stats = {env.name(), seed, ds.samples.size(), ds.rejections, fitted};
    out.baselines.push_back({env.name(), "trilat", seed,
                             score(sp.test, trilateration_predictor(env, fitted), "trilat").overall_mae_mm});
    out.baselines.push_back({env.name(), "hybrid", seed,
                             score(sp.test, hybrid_predictor(env, fitted), "hybrid").overall_mae_mm});

    for (Layout layout : cfg.layouts) {
        const Dataset train = project_layout(sp.train, layout);
        const Dataset test = project_layout(sp.test, layout);
        const NormStats stats = compute_norm_stats(train);
        const std::vector<neural::Sample> samples = normalize(train, stats);
        const int width = static_cast<int>(feature_width(layout));

        for (neural::Family f : cfg.models) {
            const auto tag = static_cast<std::uint64_t>(f);
            neural::Model model = neural::make_model(f, width, samples, derive_seed(seed, env_index, 10 + tag), cfg.shape);
            CellResult cell;
            cell.environment = env.name();
            cell.family = f;
            cell.layout = layout;
            cell.seed = seed;
            cell.untrained_mae_mm = evaluate_mae(model, test, stats).overall_mae_mm;

            if (f == neural::Family::rbf) {
                std::get<neural::RbfModel>(model).fit_output(samples, cfg.shape.rbf_ridge);
            } else {
                neural::TrainConfig tc;
                tc.learning_rate = cfg.train.learning_rate;
                tc.batch_size = cfg.train.batch_size;
                tc.iterations = cfg.train.steps_for(samples.size());
                tc.seed = derive_seed(seed, env_index, 20 + tag);
                neural::TrainResult tr = neural::train(std::move(model), samples, tc);
                model = std::move(tr.model);
                cell.steps = tc.iterations;
                cell.loss_history = window_means(tr.loss_history, cfg.loss_log_stride);
            }
            const EvalReport r = evaluate_mae(model, test, stats);
            cell.mae_mm = r.overall_mae_mm;
            cell.per_point_mae_mm = r.per_point_mae_mm;
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

std::size_t thread_count(const ExperimentConfig& cfg, std::size_t units) {
    std::size_t n = cfg.threads;
    if (n == 0) {
        if (const char* env = std::getenv("LOCUS_THREADS")) n = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(units, 1));
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::string column_name(neural::Family f, Layout l) {
    return std::string(neural::family_name(f)) + "_" + std::string(layout_name(l));
}

bool has_both_layouts(const ExperimentReport& r) {
    return std::find(r.layouts.begin(), r.layouts.end(), Layout::rssi) != r.layouts.end() &&
           std::find(r.layouts.begin(), r.layouts.end(), Layout::hybrid) != r.layouts.end();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) noexcept {
    // splitmix64 finalizer over a simple combination.
    std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + (a + 1) * 0xBF58476D1CE4E5B9ULL + (b + 1) * 0x94D049BB133111EBULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.environments.empty()) throw std::invalid_argument("experiment has no environments");
    ExperimentReport report;
    for (const auto& e : cfg.environments) report.environments.push_back(e.env.name());
    report.models = cfg.models;
    report.layouts = cfg.layouts;
    report.seeds = cfg.seeds;
    report.loss_log_stride = cfg.loss_log_stride;

    const std::size_t units = cfg.environments.size() * cfg.seeds.size();
    std::vector<UnitResult> results(units);
    std::vector<std::exception_ptr> errors(units);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t u = next++; u < units; u = next++) {
            try {
                results[u] = run_unit(cfg, u / cfg.seeds.size(), cfg.seeds[u % cfg.seeds.size()]);
            } catch (...) {
                errors[u] = std::current_exception();
            }
        }
    };
    const std::size_t threads = thread_count(cfg, units);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    for (auto& r : results) {
        for (auto& c : r.cells) report.cells.push_back(std::move(c));
        for (auto& b : r.baselines) report.baselines.push_back(std::move(b));
        report.datasets.push_back(std::move(r.stats));
    }
    return report;
}

double ExperimentReport::mean_mae(std::string_view env, neural::Family f, Layout l) const {
    std::vector<double> v;
    for (const auto& c : cells)
        if (c.environment == env && c.family == f && c.layout == l) v.push_back(c.mae_mm);
    return mean_of(v);
}

double ExperimentReport::mean_untrained_mae(std::string_view env, neural::Family f, Layout l) const {
    std::vector<double> v;
    for (const auto& c : cells)
        if (c.environment == env && c.family == f && c.layout == l) v.push_back(c.untrained_mae_mm);
    return mean_of(v);
}

double ExperimentReport::mean_baseline(std::string_view env, std::string_view method) const {
    std::vector<double> v;
    for (const auto& b : baselines)
        if (b.environment == env && b.method == method) v.push_back(b.mae_mm);
    return mean_of(v);
}

double ExperimentReport::improvement(std::string_view env, neural::Family f) const {
    return improvement_percent(mean_mae(env, f, Layout::rssi), mean_mae(env, f, Layout::hybrid));
}

nlohmann::json report_to_json(const ExperimentReport& r) {
    using nlohmann::json;
    json j;
    j["environments"] = r.environments;
    json models = json::array();
    for (auto f : r.models) models.push_back(std::string(neural::family_name(f)));
    json layouts = json::array();
    for (auto l : r.layouts) layouts.push_back(std::string(layout_name(l)));
    j["models"] = models;
    j["layouts"] = layouts;
    j["seeds"] = r.seeds;

    json cells = json::array();
    for (const auto& c : r.cells) {
        cells.push_back({{"environment", c.environment},
                         {"model", std::string(neural::family_name(c.family))},
                         {"layout", std::string(layout_name(c.layout))},
                         {"seed", c.seed},
                         {"mae_mm", c.mae_mm},
                         {"untrained_mae_mm", c.untrained_mae_mm},
                         {"per_point_mae_mm", c.per_point_mae_mm},
                         {"steps", c.steps},
                         {"final_loss", c.loss_history.empty() ? json() : json(c.loss_history.back())}});
    }
    j["cells"] = cells;

    json baselines = json::array();
    for (const auto& b : r.baselines)
        baselines.push_back({{"environment", b.environment}, {"method", b.method}, {"seed", b.seed}, {"mae_mm", b.mae_mm}});
    j["baselines"] = baselines;

    json datasets = json::array();
    for (const auto& d : r.datasets) {
        json fitted = json::array();
        for (const auto& p : d.calibrated) fitted.push_back(path_loss_to_json(p));
        datasets.push_back({{"environment", d.environment},
                            {"seed", d.seed},
                            {"samples", d.samples},
                            {"rejections", d.rejections},
                            {"calibrated_path_loss", fitted}});
    }
    j["datasets"] = datasets;

    json mae = json::object();
    json base = json::object();
    json impr = json::object();
    for (const auto& env : r.environments) {
        json row = json::object();
        for (auto f : r.models)
            for (auto l : r.layouts) row[column_name(f, l)] = r.mean_mae(env, f, l);
        mae[env] = row;
        base[env] = {{"trilat", r.mean_baseline(env, "trilat")}, {"hybrid", r.mean_baseline(env, "hybrid")}};
        if (has_both_layouts(r)) {
            json irow = json::object();
            for (auto f : r.models) irow[std::string(neural::family_name(f))] = r.improvement(env, f);
            impr[env] = irow;
        }
    }
    j["mae_table_mm"] = mae;
    j["baseline_mae_mm"] = base;
    j["improvement_percent"] = impr;
    return j;
}

std::string mae_table_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "environment";
    for (auto f : r.models)
        for (auto l : r.layouts) os << ',' << column_name(f, l);
    os << '\n';
    for (const auto& env : r.environments) {
        os << env;
        for (auto f : r.models)
            for (auto l : r.layouts) os << ',' << io::format_fixed(r.mean_mae(env, f, l));
        os << '\n';
    }
    return os.str();
}

std::string improvement_table_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "environment";
    for (auto f : r.models) os << ',' << neural::family_name(f);
    os << '\n';
    if (!has_both_layouts(r)) return os.str();
    for (const auto& env : r.environments) {
        os << env;
        for (auto f : r.models) os << ',' << io::format_fixed(r.improvement(env, f));
        os << '\n';
    }
    return os.str();
}

std::string loss_history_csv(const ExperimentReport& r) {
    std::ostringstream os;
    os << "environment,model,layout,seed,step,loss\n";
    for (const auto& c : r.cells) {
        for (std::size_t w = 0; w < c.loss_history.size(); ++w) {
            const std::size_t step = std::min((w + 1) * r.loss_log_stride, c.steps);
            os << c.environment << ',' << neural::family_name(c.family) << ',' << layout_name(c.layout) << ','
               << c.seed << ',' << step << ',' << io::format_fixed(c.loss_history[w]) << '\n';
        }
    }
    return os.str();
}

void write_report(const ExperimentReport& r, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    io::write_text_file(dir / "report.json", io::dump_fixed(report_to_json(r)) + "\n");
    io::write_text_file(dir / "mae_table.csv", mae_table_csv(r));
    io::write_text_file(dir / "improvement_table.csv", improvement_table_csv(r));
    io::write_text_file(dir / "loss_history.csv", loss_history_csv(r));
}

}  // namespace locus::pipeline
