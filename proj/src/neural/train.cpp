#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "locus/kernels.hpp"
#include "locus/neural.hpp"

namespace locus::neural {

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
    if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
    if (iterations == 0) throw std::invalid_argument("iteration count must be positive");
}

TrainResult train(Model model, std::span<const Sample> data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw std::invalid_argument("training data is empty");
    const auto width = static_cast<std::size_t>(input_width(model));
    for (const Sample& s : data)
        if (s.x.size() != width) throw std::invalid_argument("feature width does not match model input");

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = data.size();  // forces a shuffle before the first step

    TrainResult out{std::move(model), {}};
    out.loss_history.reserve(cfg.iterations);
    std::vector<Sample> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t step = 0; step < cfg.iterations; ++step) {
        if (cursor >= data.size()) {
            std::shuffle(order.begin(), order.end(), rng);
            cursor = 0;
        }
        const std::size_t end = std::min(cursor + cfg.batch_size, data.size());
        batch.clear();
        for (std::size_t i = cursor; i < end; ++i) batch.push_back(data[order[i]]);
        cursor = end;

        const LossGrad lg = loss_and_gradients(out.model, batch);
        out.loss_history.push_back(lg.loss);
        if (cfg.learning_rate != 0.0) kernels::axpy(-cfg.learning_rate, lg.grad, trainable_params(out.model));
    }
    return out;
}

}  // namespace locus::neural
