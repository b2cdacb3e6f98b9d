#include <stdexcept>
#include <string>

#include "locus/pipeline.hpp"
#include "locus/plfit.hpp"

namespace locus::pipeline {

namespace {

using nlohmann::json;

NlosModel nlos_from_json(const json& j) {
    NlosModel m;
    m.excess_loss_db = j.value("excess_loss_db", 0.0);
    m.aoa_bias_deg_sigma = j.value("aoa_bias_deg_sigma", 0.0);
    m.excess_loss_jitter_db = j.value("excess_loss_jitter_db", 0.0);
    m.validate();
    return m;
}

template <class T, class Parse>
T resolve(const json& ref, const json& profiles, const char* kind, Parse parse) {
    if (ref.is_string()) {
        const auto name = ref.get<std::string>();
        if (!profiles.contains(name))
            throw std::invalid_argument(std::string("unknown ") + kind + " profile '" + name + "'");
        return parse(profiles.at(name));
    }
    if (ref.is_object()) return parse(ref);
    throw std::invalid_argument(std::string(kind) + " must name a profile or be an object");
}

}  // namespace

std::size_t TrainSettings::steps_for(std::size_t train_size) const noexcept {
    if (iterations > 0) return iterations;
    const std::size_t per_epoch = (train_size + batch_size - 1) / batch_size;
    return epochs * per_epoch;
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    const json empty = json::object();
    const json& pl_profiles = j.contains("path_loss_profiles") ? j.at("path_loss_profiles") : empty;
    const json& nlos_profiles = j.contains("nlos_profiles") ? j.at("nlos_profiles") : empty;

    const AoaMode mode = parse_aoa_mode(j.value("aoa_mode", std::string("fast")));
    MusicSettings music;
    if (j.contains("music")) {
        const json& m = j.at("music");
        music.array.m = m.value("m", music.array.m);
        music.array.spacing_wavelengths = m.value("spacing_wavelengths", music.array.spacing_wavelengths);
        music.array.snapshots = m.value("snapshots", music.array.snapshots);
        music.snr_db = m.value("snr_db", music.snr_db);
        music.grid_step_deg = m.value("grid_step_deg", music.grid_step_deg);
        music.array.validate();
    }
    const double default_aoa_noise = j.value("aoa_noise_deg", 2.0);

    if (!j.contains("environments") || !j.at("environments").is_array() || j.at("environments").empty())
        throw std::invalid_argument("config needs a non-empty 'environments' array");
    for (const json& e : j.at("environments")) {
        json env_doc = e;
        if (!env_doc.contains("test_points")) {
            env_doc["test_points"] = default_test_points(e.at("length_m").get<double>(), e.at("width_m").get<double>(),
                                                         e.value("test_point_count", std::size_t{10}),
                                                         e.value("point_seed", std::uint64_t{1}));
        }
        EnvironmentSetup setup{environment_from_json(env_doc), {}};
        if (!e.contains("path_loss")) throw std::invalid_argument("environment needs a 'path_loss' profile");
        const json& pl = e.at("path_loss");
        if (pl.is_array()) {
            if (pl.size() != 3) throw std::invalid_argument("path_loss array needs one entry per anchor");
            for (std::size_t i = 0; i < 3; ++i)
                setup.channel.path_loss[i] = resolve<PathLossParams>(pl[i], pl_profiles, "path_loss", path_loss_from_json);
        } else {
            setup.channel.path_loss.fill(resolve<PathLossParams>(pl, pl_profiles, "path_loss", path_loss_from_json));
        }
        if (e.contains("nlos")) setup.channel.nlos = resolve<NlosModel>(e.at("nlos"), nlos_profiles, "nlos", nlos_from_json);
        setup.channel.aoa_noise_deg = e.value("aoa_noise_deg", default_aoa_noise);
        setup.channel.aoa_mode = mode;
        setup.channel.music = music;
        cfg.environments.push_back(std::move(setup));
    }

    cfg.n_per_point = j.value("n_per_point", cfg.n_per_point);
    cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
    if (j.contains("models")) {
        cfg.models.clear();
        for (const auto& m : j.at("models")) cfg.models.push_back(neural::parse_family(m.get<std::string>()));
    }
    if (j.contains("layouts")) {
        cfg.layouts.clear();
        for (const auto& l : j.at("layouts")) cfg.layouts.push_back(parse_layout(l.get<std::string>()));
    }
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        cfg.seeds.clear();
        if (s.is_number_integer()) {
            if (s.get<std::int64_t>() < 1) throw std::invalid_argument("seed count must be >= 1");
            for (std::uint64_t k = 1; k <= s.get<std::uint64_t>(); ++k) cfg.seeds.push_back(k);
        } else {
            cfg.seeds = s.get<std::vector<std::uint64_t>>();
        }
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.iterations = t.value("iterations", cfg.train.iterations);
    }
    if (j.contains("model_shape")) {
        const json& m = j.at("model_shape");
        cfg.shape.hidden = m.value("hidden", cfg.shape.hidden);
        cfg.shape.hidden_layers = m.value("hidden_layers", cfg.shape.hidden_layers);
        cfg.shape.filters = m.value("filters", cfg.shape.filters);
        cfg.shape.kernel = m.value("kernel", cfg.shape.kernel);
        cfg.shape.rbf_centers = m.value("rbf_centers", cfg.shape.rbf_centers);
        cfg.shape.rbf_ridge = m.value("rbf_ridge", cfg.shape.rbf_ridge);
    }
    if (j.contains("outlier")) {
        const json& o = j.at("outlier");
        cfg.rssi_threshold_sigmas = o.value("rssi_sigmas", cfg.rssi_threshold_sigmas);
        cfg.aoa_threshold_deg = o.value("aoa_threshold_deg", cfg.aoa_threshold_deg);
    }
    cfg.loss_log_stride = j.value("loss_log_stride", cfg.loss_log_stride);
    cfg.calibration_samples = j.value("calibration_samples", cfg.calibration_samples);
    cfg.threads = j.value("threads", cfg.threads);

    if (cfg.n_per_point == 0) throw std::invalid_argument("n_per_point must be >= 1");
    if (cfg.models.empty() || cfg.layouts.empty() || cfg.seeds.empty())
        throw std::invalid_argument("config needs at least one model, layout and seed");
    if (cfg.train.batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (cfg.loss_log_stride == 0) throw std::invalid_argument("loss_log_stride must be positive");
    if (cfg.calibration_samples < 3) throw std::invalid_argument("calibration_samples must be >= 3");
    return cfg;
}

}  // namespace locus::pipeline
