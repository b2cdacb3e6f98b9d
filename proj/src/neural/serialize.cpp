#include <cmath>
#include <stdexcept>
#include <string>

#include "locus/neural.hpp"

namespace locus::neural {

namespace {

constexpr const char* kFormat = "locus-model";
constexpr int kVersion = 1;

void load_params(std::span<double> dst, const nlohmann::json& src) {
    const auto values = src.get<std::vector<double>>();
    if (values.size() != dst.size()) throw std::invalid_argument("model parameter count mismatch");
    std::copy(values.begin(), values.end(), dst.begin());
}

}  // namespace

nlohmann::json model_to_json(const Model& m, const nlohmann::json& extra) {
    for (double v : trainable_params(m))
        if (!std::isfinite(v)) throw std::runtime_error("model has non-finite parameters (training diverged)");
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["family"] = std::string(family_name(family(m)));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, MlpModel>) {
                j["shapes"] = {{"widths", v.widths()}};
            } else if constexpr (std::is_same_v<T, CnnModel>) {
                j["shapes"] = {{"input_len", v.input_len()},
                               {"filters", v.filters()},
                               {"kernel", v.kernel()},
                               {"hidden", v.hidden()}};
            } else {
                j["shapes"] = {{"input_width", v.input_width()}, {"centers", v.center_count()}};
                j["centers"] = v.centers_flat();
                j["widths"] = v.widths();
            }
            j["params"] = std::vector<double>(v.params().begin(), v.params().end());
        },
        m);
    if (!extra.is_null()) j["normalization"] = extra;
    return j;
}

Model model_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string{}) != kFormat) throw std::invalid_argument("not a locus model document");
    if (j.value("version", 0) != kVersion) throw std::invalid_argument("unsupported model version");
    const Family f = parse_family(j.at("family").get<std::string>());
    const auto& shapes = j.at("shapes");
    switch (f) {
        case Family::mlp: {
            MlpModel m(shapes.at("widths").get<std::vector<int>>());
            load_params(m.params(), j.at("params"));
            return m;
        }
        case Family::cnn: {
            CnnModel m(shapes.at("input_len").get<int>(), shapes.at("filters").get<int>(),
                       shapes.at("kernel").get<int>(), shapes.at("hidden").get<int>());
            load_params(m.params(), j.at("params"));
            return m;
        }
        case Family::rbf: {
            const int dim = shapes.at("input_width").get<int>();
            const auto flat = j.at("centers").get<std::vector<double>>();
            const auto widths = j.at("widths").get<std::vector<double>>();
            if (dim < 1 || flat.size() != widths.size() * static_cast<std::size_t>(dim))
                throw std::invalid_argument("RBF center array has the wrong size");
            std::vector<std::vector<double>> centers;
            for (std::size_t c = 0; c < widths.size(); ++c)
                centers.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(c * dim),
                                     flat.begin() + static_cast<std::ptrdiff_t>((c + 1) * dim));
            RbfModel m(std::move(centers), widths);
            load_params(m.params(), j.at("params"));
            return m;
        }
    }
    throw std::invalid_argument("unknown model family");
}

}  // namespace locus::neural
