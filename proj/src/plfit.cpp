#include "locus/plfit.hpp"

#include <cmath>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace locus {

FitResult fit_path_loss(std::span<const FitSample> samples, double d0) {
    if (!(d0 > 0.0)) throw std::invalid_argument("reference distance must be > 0");
    if (samples.size() < 3) throw std::invalid_argument("path-loss fit needs at least 3 samples");

    const auto n = static_cast<double>(samples.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (const FitSample& s : samples) {
        if (!(s.d >= d0)) throw std::invalid_argument("fit sample closer than reference distance");
        if (!std::isfinite(s.rssi)) throw std::invalid_argument("fit sample rssi must be finite");
        mean_x += std::log10(s.d / d0);
        mean_y += s.rssi;
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    for (const FitSample& s : samples) {
        const double dx = std::log10(s.d / d0) - mean_x;
        sxx += dx * dx;
        sxy += dx * (s.rssi - mean_y);
    }
    // Relative test: sxx is a sum of squared deviations of log-distances.
    if (sxx <= 1e-12 * n * (1.0 + mean_x * mean_x))
        throw std::invalid_argument("path-loss fit is rank deficient: all distances identical");

    const double slope = sxy / sxx;  // = -10 * gamma
    const double intercept = mean_y - slope * mean_x;

    double ssr = 0.0;
    for (const FitSample& s : samples) {
        const double r = s.rssi - (intercept + slope * std::log10(s.d / d0));
        ssr += r * r;
    }

    FitResult out;
    out.params.gamma = -slope / 10.0;
    out.params.p_r_d0 = intercept;
    out.params.d0 = d0;
    out.params.sigma = std::sqrt(ssr / (n - 2.0));
    out.residual_rms = std::sqrt(ssr / n);
    out.n = samples.size();
    return out;
}

std::vector<FitSample> read_fit_samples_csv(std::istream& is) {
    std::vector<FitSample> out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("expected d_m,rssi_dbm: " + line);
        try {
            out.push_back({std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
        } catch (const std::invalid_argument&) {
            if (!first) throw std::invalid_argument("non-numeric row: " + line);
        }
        first = false;
    }
    return out;
}

nlohmann::json path_loss_to_json(const PathLossParams& p) {
    return {{"gamma", p.gamma}, {"sigma_db", p.sigma}, {"p_r_d0_dbm", p.p_r_d0}, {"d0_m", p.d0}};
}

PathLossParams path_loss_from_json(const nlohmann::json& j) {
    const nlohmann::json& body = j.contains("params") ? j.at("params") : j;
    PathLossParams p;
    p.gamma = body.at("gamma").get<double>();
    p.sigma = body.value("sigma_db", 0.0);
    p.p_r_d0 = body.at("p_r_d0_dbm").get<double>();
    p.d0 = body.value("d0_m", 1.0);
    p.validate();
    return p;
}

nlohmann::json fit_result_to_json(const FitResult& r) {
    return {{"params", path_loss_to_json(r.params)},
            {"residual_rms_db", r.residual_rms},
            {"n", r.n}};
}

}  // namespace locus
