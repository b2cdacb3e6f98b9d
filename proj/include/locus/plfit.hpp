#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "locus/channel.hpp"

namespace locus {

struct FitSample {
    double d = 1.0;    // m
    double rssi = 0.0; // dBm
};

struct FitResult {
    PathLossParams params;
    double residual_rms = 0.0;  // dB, population RMS of the residuals
    std::size_t n = 0;
};

/// Ordinary least squares of rssi against log10(d/d0). Sigma is the residual
/// standard deviation with n-2 degrees of freedom.
///
/// Throws std::invalid_argument with fewer than 3 samples, samples below d0, or
/// when every sample sits at the same distance.
FitResult fit_path_loss(std::span<const FitSample> samples, double d0);

/// Reads "d_m,rssi_dbm" rows. A leading non-numeric header row is skipped.
std::vector<FitSample> read_fit_samples_csv(std::istream& is);

nlohmann::json path_loss_to_json(const PathLossParams& p);
PathLossParams path_loss_from_json(const nlohmann::json& j);
nlohmann::json fit_result_to_json(const FitResult& r);

}  // namespace locus
