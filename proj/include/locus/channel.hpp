#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace locus {

/// Every randomized operation draws from a caller-owned generator seeded with a u64.
using Rng = std::mt19937_64;

/// Log-distance path loss with log-normal shadowing.
struct PathLossParams {
    double gamma = 2.0;    // path-loss coefficient
    double sigma = 0.0;    // shadowing std, dB
    double p_r_d0 = -40.0; // received power at d0, dBm
    double d0 = 1.0;       // reference distance, m

    /// Throws std::invalid_argument unless gamma > 0, sigma >= 0, d0 > 0.
    void validate() const;
};

/// Mean received power at distance d >= d0.
double expected_rssi(const PathLossParams& params, double d);

/// expected_rssi minus a zero-mean Gaussian draw with std `sigma`.
double simulate_rssi(const PathLossParams& params, double d, Rng& rng);

/// Uniform linear array.
struct ArraySpec {
    int m = 8;
    double spacing_wavelengths = 0.5;
    int snapshots = 256;

    void validate() const;
};

struct SourceSpec {
    double theta_deg = 0.0;  // relative to broadside, [-90, 90]
    double power_db = 0.0;   // relative to unit noise power
};

/// ULA response a(theta): element n has phase -2*pi*spacing*n*sin(theta).
Eigen::VectorXcd steering_vector(const ArraySpec& array, double theta_deg);

/// M x T complex samples, one column per snapshot.
struct SnapshotMatrix {
    Eigen::MatrixXcd data;
    ArraySpec array;
};

/// Pass -infinity as noise_power_db for noiseless data.
SnapshotMatrix simulate_snapshots(const ArraySpec& array, std::span<const SourceSpec> sources,
                                  double noise_power_db, Rng& rng);

/// Non-line-of-sight distortion. RSSI loses excess_loss_db on average, with
/// optional Gaussian spread excess_loss_jitter_db around that mean; AoA gets a
/// zero-mean Gaussian bias of std aoa_bias_deg_sigma.
struct NlosModel {
    double excess_loss_db = 0.0;
    double aoa_bias_deg_sigma = 0.0;
    double excess_loss_jitter_db = 0.0;

    void validate() const;
};

/// Returns the distorted (rssi, aoa).
std::pair<double, double> apply_nlos(double rssi, double aoa_deg, const NlosModel& model, Rng& rng);

/// Standard normal draw. std::normal_distribution carries cached state, so
/// callers that need draws independent of call history use this instead.
double standard_normal(Rng& rng);

/// One line per array element, each a comma-separated list of re,im pairs.
void write_snapshots_csv(std::ostream& os, const SnapshotMatrix& x);
SnapshotMatrix read_snapshots_csv(std::istream& is, double spacing_wavelengths = 0.5);

}  // namespace locus
