#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "locus/neural.hpp"

namespace locus::neural {

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::mlp: return "mlp";
        case Family::rbf: return "rbf";
        case Family::cnn: return "cnn";
    }
    return "?";
}

Family parse_family(std::string_view name) {
    if (name == "mlp" || name == "bpnn") return Family::mlp;
    if (name == "rbf") return Family::rbf;
    if (name == "cnn") return Family::cnn;
    throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

Family family(const Model& m) noexcept { return static_cast<Family>(m.index()); }

int input_width(const Model& m) noexcept {
    return std::visit([](const auto& v) { return v.input_width(); }, m);
}

std::span<double> trainable_params(Model& m) noexcept {
    return std::visit([](auto& v) { return v.params(); }, m);
}

std::span<const double> trainable_params(const Model& m) noexcept {
    return std::visit([](const auto& v) { return std::span<const double>(v.params()); }, m);
}

Point2D forward(const Model& m, std::span<const double> x) {
    return std::visit([&](const auto& v) { return v.forward(x); }, m);
}

LossGrad loss_and_gradients(const Model& m, std::span<const Sample> batch) {
    return std::visit([&](const auto& v) { return v.loss_and_gradients(batch); }, m);
}

Model make_model(Family f, int input_width, std::span<const Sample> data, std::uint64_t seed,
                 const ModelShape& shape) {
    Rng rng(seed);
    switch (f) {
        case Family::mlp: {
            if (shape.hidden_layers < 1) throw std::invalid_argument("MLP needs a hidden layer");
            std::vector<int> widths{input_width};
            for (int i = 0; i < shape.hidden_layers; ++i) widths.push_back(shape.hidden);
            widths.push_back(2);
            MlpModel m(std::move(widths));
            m.xavier_init(rng);
            return m;
        }
        case Family::cnn: {
            CnnModel m(input_width, shape.filters, shape.kernel, shape.hidden);
            m.xavier_init(rng);
            return m;
        }
        case Family::rbf: {
            std::vector<std::vector<double>> points;
            points.reserve(data.size());
            for (const Sample& s : data) points.push_back(s.x);
            const std::size_t k = std::min(shape.rbf_centers, points.size());
            RbfModel m(init_rbf_centers(points, k, rng()));
            m.xavier_init(rng);
            return m;
        }
    }
    throw std::invalid_argument("unknown model family");
}

double gradient_check(const Model& m, std::span<const Sample> batch, double h,
                      const GradientFn& analytic) {
    if (batch.empty()) throw std::invalid_argument("gradient check needs a non-empty batch");
    if (trainable_params(m).empty()) throw std::invalid_argument("model has no trainable parameters");
    const LossGrad g = analytic ? analytic(m, batch) : loss_and_gradients(m, batch);
    Model probe = m;
    const std::span<double> p = trainable_params(probe);
    if (g.grad.size() != p.size()) throw std::invalid_argument("gradient size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + h;
        const double up = loss_and_gradients(probe, batch).loss;
        p[i] = saved - h;
        const double down = loss_and_gradients(probe, batch).loss;
        p[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        const double err = std::abs(g.grad[i] - fd) / std::max(std::abs(g.grad[i]) + std::abs(fd), 1e-6);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace locus::neural
