#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "locus/kernels.hpp"
#include "locus/neural.hpp"

namespace locus::neural {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

RbfModel::RbfModel(std::vector<std::vector<double>> centers, std::vector<double> widths) {
    if (centers.empty()) throw std::invalid_argument("RBF model needs at least one center");
    if (widths.size() != centers.size()) throw std::invalid_argument("one width per center required");
    input_width_ = static_cast<int>(centers.front().size());
    if (input_width_ < 1) throw std::invalid_argument("RBF centers must be non-empty vectors");
    for (const auto& c : centers) {
        if (c.size() != static_cast<std::size_t>(input_width_))
            throw std::invalid_argument("RBF centers differ in dimension");
        centers_.insert(centers_.end(), c.begin(), c.end());
    }
    for (double w : widths)
        if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("RBF widths must be > 0");
    widths_ = std::move(widths);
    params_.assign(2 * widths_.size() + 2, 0.0);
}

std::vector<double> RbfModel::activations(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_width_))
        throw std::invalid_argument("feature width does not match model input");
    const std::size_t d = x.size();
    std::vector<double> phi(widths_.size());
    for (std::size_t j = 0; j < widths_.size(); ++j) {
        const double r2 = squared_distance(x, std::span<const double>(centers_).subspan(j * d, d));
        phi[j] = std::exp(-r2 / (2.0 * widths_[j] * widths_[j]));
    }
    return phi;
}

Point2D RbfModel::forward(std::span<const double> x) const {
    const std::vector<double> phi = activations(x);
    const std::size_t k = widths_.size();
    const std::span<const double> p(params_);
    return {p[2 * k] + kernels::dot(p.subspan(0, k), phi), p[2 * k + 1] + kernels::dot(p.subspan(k, k), phi)};
}

LossGrad RbfModel::loss_and_gradients(std::span<const Sample> batch) const {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::size_t k = widths_.size();
    const std::span<const double> p(params_);
    LossGrad out;
    out.grad.assign(params_.size(), 0.0);
    const double n = static_cast<double>(batch.size());
    double sse = 0.0;
    for (const Sample& s : batch) {
        const std::vector<double> phi = activations(s.x);
        const double e0 = p[2 * k] + kernels::dot(p.subspan(0, k), phi) - s.y.x;
        const double e1 = p[2 * k + 1] + kernels::dot(p.subspan(k, k), phi) - s.y.y;
        sse += e0 * e0 + e1 * e1;
        kernels::axpy(e0 / n, phi, std::span<double>(out.grad).subspan(0, k));
        kernels::axpy(e1 / n, phi, std::span<double>(out.grad).subspan(k, k));
        out.grad[2 * k] += e0 / n;
        out.grad[2 * k + 1] += e1 / n;
    }
    out.loss = sse / (2.0 * n);
    return out;
}

void RbfModel::xavier_init(Rng& rng) {
    const std::size_t k = widths_.size();
    const double limit = std::sqrt(6.0 / (static_cast<double>(k) + 2.0));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t i = 0; i < 2 * k; ++i) params_[i] = u(rng);
    params_[2 * k] = 0.0;
    params_[2 * k + 1] = 0.0;
}

void RbfModel::fit_output(std::span<const Sample> data, double ridge) {
    if (data.empty()) throw std::invalid_argument("RBF output fit needs data");
    if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
    const std::size_t k = widths_.size();
    const auto rows = static_cast<Eigen::Index>(data.size());
    const auto cols = static_cast<Eigen::Index>(k + 1);
    Eigen::MatrixXd phi(rows, cols);
    Eigen::MatrixXd y(rows, 2);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& s = data[static_cast<std::size_t>(i)];
        const std::vector<double> a = activations(s.x);
        for (std::size_t j = 0; j < k; ++j) phi(i, static_cast<Eigen::Index>(j)) = a[j];
        phi(i, cols - 1) = 1.0;
        y(i, 0) = s.y.x;
        y(i, 1) = s.y.y;
    }
    Eigen::MatrixXd w;
    if (ridge > 0.0) {
        Eigen::MatrixXd normal = phi.transpose() * phi;
        normal.diagonal().array() += ridge;
        w = normal.ldlt().solve(phi.transpose() * y);
    } else {
        w = phi.completeOrthogonalDecomposition().solve(y);
    }
    for (std::size_t j = 0; j < k; ++j) {
        params_[j] = w(static_cast<Eigen::Index>(j), 0);
        params_[k + j] = w(static_cast<Eigen::Index>(j), 1);
    }
    params_[2 * k] = w(cols - 1, 0);
    params_[2 * k + 1] = w(cols - 1, 1);
}

RbfCenters init_rbf_centers(std::span<const std::vector<double>> points, std::size_t k,
                            std::uint64_t seed) {
    const std::size_t n = points.size();
    if (k == 0) throw std::invalid_argument("need at least one RBF center");
    if (k > n) throw std::invalid_argument("more RBF centers requested than samples");
    const std::size_t dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw std::invalid_argument("points differ in dimension");

    // k-means++ seeding. Points at distance 0 from a chosen center are never
    // picked, which deduplicates repeated inputs.
    Rng rng(seed);
    std::vector<std::vector<double>> centers;
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
            total += d2[i];
        }
        if (!(total > 0.0)) break;
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            pick = i;
            target -= d2[i];
            if (target < 0.0) break;
        }
        centers.push_back(points[pick]);
    }

    const std::size_t kc = centers.size();
    std::vector<std::size_t> assign(n, 0);
    std::vector<double> sums(kc * dim);
    std::vector<std::size_t> counts(kc);
    for (int iter = 0; iter < 50; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(points[i], centers[0]);
            for (std::size_t j = 1; j < kc; ++j) {
                const double dj = squared_distance(points[i], centers[j]);
                if (dj < best_d) {
                    best_d = dj;
                    best = j;
                }
            }
            assign[i] = best;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t c = 0; c < dim; ++c) sums[assign[i] * dim + c] += points[i][c];
        }
        for (std::size_t j = 0; j < kc; ++j) {
            if (counts[j] == 0) continue;  // empty cluster keeps its center
            for (std::size_t c = 0; c < dim; ++c)
                centers[j][c] = sums[j * dim + c] / static_cast<double>(counts[j]);
        }
    }

    RbfCenters out;
    out.widths.resize(kc);
    for (std::size_t j = 0; j < kc; ++j) {
        std::vector<double> dist;
        for (std::size_t o = 0; o < kc; ++o)
            if (o != j) dist.push_back(std::sqrt(squared_distance(centers[j], centers[o])));
        std::sort(dist.begin(), dist.end());
        double w = 0.0;
        if (dist.empty()) {
            // Lone center: RMS spread of the data around it.
            for (const auto& p : points) w += squared_distance(p, centers[j]);
            w = std::sqrt(w / static_cast<double>(n));
        } else {
            const std::size_t m = std::min<std::size_t>(2, dist.size());
            for (std::size_t i = 0; i < m; ++i) w += dist[i];
            w /= static_cast<double>(m);
        }
        out.widths[j] = w > 1e-12 ? w : 1.0;
    }
    out.centers = std::move(centers);
    return out;
}

}  // namespace locus::neural
