#pragma once

#include <vector>

#include <Eigen/Dense>

#include "locus/channel.hpp"

namespace locus {

/// Hermitian spatial correlation matrix.
struct CorrelationMatrix {
    Eigen::MatrixXcd r;
};

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct EigenDecomposition {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

struct SpatialSpectrum {
    std::vector<double> grid_deg;
    std::vector<double> power;
};

/// Inclusive angle grid start, start+step, ..., up to stop.
struct AngleGrid {
    double start_deg = -90.0;
    double stop_deg = 90.0;
    double step_deg = 0.1;

    std::vector<double> points() const;
};

/// R = (1/T) X X^H, symmetrized.
CorrelationMatrix correlation_matrix(const SnapshotMatrix& x);

/// Cyclic complex Jacobi rotations until the off-diagonal mass is at roundoff
/// level. Each eigenvector is phase-normalized so its largest-magnitude
/// component is real and positive.
EigenDecomposition eigendecompose(const CorrelationMatrix& r);

/// The M-k eigenvectors belonging to the smallest eigenvalues.
Eigen::MatrixXcd noise_subspace(const EigenDecomposition& e, int k);

/// P(theta) = 1 / (a^H U_N U_N^H a), denominator floored at 1e-15.
SpatialSpectrum spatial_spectrum(const Eigen::MatrixXcd& un, const ArraySpec& array,
                                 const AngleGrid& grid);

/// MUSIC estimate of `k` arrival angles, ascending. Peaks are the k largest
/// local maxima of the spectrum (lower angle wins ties), each refined by a
/// parabola through its 3-point neighbourhood in dB.
///
/// Throws std::runtime_error if the spectrum has fewer than k local maxima.
std::vector<double> estimate_aoa(const SnapshotMatrix& x, int k, double grid_step_deg = 0.1);

/// Peak picking on an already computed spectrum.
std::vector<double> pick_peaks(const SpatialSpectrum& spectrum, int k);

/// Number of strict local maxima in the spectrum.
std::size_t count_peaks(const SpatialSpectrum& spectrum);

}  // namespace locus
