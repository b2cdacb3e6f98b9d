#include "locus/channel.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace locus {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

void PathLossParams::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw std::invalid_argument("path-loss coefficient gamma must be > 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("shadowing sigma must be >= 0");
    if (!(d0 > 0.0) || !std::isfinite(d0))
        throw std::invalid_argument("reference distance d0 must be > 0");
    if (!std::isfinite(p_r_d0)) throw std::invalid_argument("reference power must be finite");
}

double expected_rssi(const PathLossParams& params, double d) {
    params.validate();
    if (!(d >= params.d0))
        throw std::domain_error("path-loss model is only valid at d >= d0");
    return params.p_r_d0 - 10.0 * params.gamma * std::log10(d / params.d0);
}

double standard_normal(Rng& rng) {
    // Box-Muller on two fresh uniforms; no state carried between calls.
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;          // [0, 1)
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double simulate_rssi(const PathLossParams& params, double d, Rng& rng) {
    const double mean = expected_rssi(params, d);
    return mean - params.sigma * standard_normal(rng);
}

void ArraySpec::validate() const {
    if (m < 2) throw std::invalid_argument("array needs at least 2 elements");
    if (!(spacing_wavelengths > 0.0)) throw std::invalid_argument("element spacing must be > 0");
    if (snapshots < 1) throw std::invalid_argument("need at least one snapshot");
}

Eigen::VectorXcd steering_vector(const ArraySpec& array, double theta_deg) {
    Eigen::VectorXcd a(array.m);
    const double phase_step =
        -2.0 * std::numbers::pi * array.spacing_wavelengths * std::sin(theta_deg * kDegToRad);
    for (int n = 0; n < array.m; ++n) a[n] = std::polar(1.0, phase_step * n);
    return a;
}

SnapshotMatrix simulate_snapshots(const ArraySpec& array, std::span<const SourceSpec> sources,
                                  double noise_power_db, Rng& rng) {
    array.validate();
    if (sources.empty() || sources.size() >= static_cast<std::size_t>(array.m))
        throw std::invalid_argument("source count must satisfy 1 <= K < M");

    std::vector<Eigen::VectorXcd> steering;
    std::vector<double> amplitude;
    for (const SourceSpec& s : sources) {
        if (!(s.theta_deg >= -90.0 && s.theta_deg <= 90.0))
            throw std::invalid_argument("source angle must lie in [-90, 90] degrees");
        steering.push_back(steering_vector(array, s.theta_deg));
        // Complex Gaussian symbol of power p: each quadrature has variance p/2.
        amplitude.push_back(std::sqrt(std::pow(10.0, s.power_db / 10.0) / 2.0));
    }
    const bool noiseless = std::isinf(noise_power_db) && noise_power_db < 0.0;
    const double noise_amp = noiseless ? 0.0 : std::sqrt(std::pow(10.0, noise_power_db / 10.0) / 2.0);

    SnapshotMatrix out{Eigen::MatrixXcd::Zero(array.m, array.snapshots), array};
    for (int t = 0; t < array.snapshots; ++t) {
        for (std::size_t k = 0; k < sources.size(); ++k) {
            const double re = standard_normal(rng);
            const double im = standard_normal(rng);
            const std::complex<double> symbol(amplitude[k] * re, amplitude[k] * im);
            out.data.col(t) += symbol * steering[k];
        }
        if (!noiseless) {
            for (int i = 0; i < array.m; ++i) {
                const double re = standard_normal(rng);
                const double im = standard_normal(rng);
                out.data(i, t) += std::complex<double>(noise_amp * re, noise_amp * im);
            }
        }
    }
    return out;
}

void NlosModel::validate() const {
    if (!(excess_loss_db >= 0.0) || !(aoa_bias_deg_sigma >= 0.0) || !(excess_loss_jitter_db >= 0.0))
        throw std::invalid_argument("NLoS model parameters must be >= 0");
}

std::pair<double, double> apply_nlos(double rssi, double aoa_deg, const NlosModel& model, Rng& rng) {
    model.validate();
    const double loss = model.excess_loss_db + model.excess_loss_jitter_db * standard_normal(rng);
    const double bias = model.aoa_bias_deg_sigma * standard_normal(rng);
    return {rssi - loss, aoa_deg + bias};
}

void write_snapshots_csv(std::ostream& os, const SnapshotMatrix& x) {
    const auto old_precision = os.precision(17);
    for (Eigen::Index i = 0; i < x.data.rows(); ++i) {
        for (Eigen::Index t = 0; t < x.data.cols(); ++t) {
            if (t > 0) os << ',';
            os << x.data(i, t).real() << ',' << x.data(i, t).imag();
        }
        os << '\n';
    }
    os.precision(old_precision);
}

SnapshotMatrix read_snapshots_csv(std::istream& is, double spacing_wavelengths) {
    std::vector<std::vector<std::complex<double>>> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> values;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            values.push_back(v);
        }
        if (values.empty() || values.size() % 2 != 0)
            throw std::invalid_argument("snapshot row must hold re,im pairs");
        std::vector<std::complex<double>> row;
        for (std::size_t k = 0; k < values.size(); k += 2) row.emplace_back(values[k], values[k + 1]);
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument("snapshot rows have different lengths");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::invalid_argument("empty snapshot matrix");
    SnapshotMatrix out;
    out.array = {static_cast<int>(rows.size()), spacing_wavelengths,
                 static_cast<int>(rows.front().size())};
    out.data.resize(out.array.m, out.array.snapshots);
    for (int i = 0; i < out.array.m; ++i)
        for (int t = 0; t < out.array.snapshots; ++t) out.data(i, t) = rows[i][t];
    for (Eigen::Index k = 0; k < out.data.size(); ++k) {
        if (!std::isfinite(out.data(k).real()) || !std::isfinite(out.data(k).imag()))
            throw std::invalid_argument("snapshot entries must be finite");
    }
    return out;
}

}  // namespace locus
