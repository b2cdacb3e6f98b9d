#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "locus/channel.hpp"
#include "locus/environment.hpp"

namespace locus::neural {

enum class Family { mlp, rbf, cnn };

std::string_view family_name(Family f) noexcept;
Family parse_family(std::string_view name);

/// One training pair in normalized units.
struct Sample {
    std::vector<double> x;
    Point2D y;
};

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;  // aligned with the model's trainable parameters
};

namespace detail {

struct Layer {
    enum class Kind { dense, conv1d, tanh };
    Kind kind = Kind::dense;
    int in_ch = 0;   // dense: input width; tanh: width
    int out_ch = 0;  // dense: output width
    int kernel = 0;  // conv1d only
    int in_len = 1;  // conv1d only
    std::size_t offset = 0;

    std::size_t in_size() const noexcept;
    std::size_t out_size() const noexcept;
    std::size_t param_count() const noexcept;
    int out_len() const noexcept { return in_len - kernel + 1; }
};

}  // namespace detail

/// Feed-forward stack of dense, 1D convolution and tanh stages ending in two
/// linear outputs. Parameters live in one flat vector: for every layer the
/// row-major weights followed by the biases.
class SequentialModel {
public:
    int input_width() const noexcept;
    std::size_t parameter_count() const noexcept { return params_.size(); }
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    Point2D forward(std::span<const double> x) const;

    /// Loss = mean over the batch and the two outputs of the squared error.
    LossGrad loss_and_gradients(std::span<const Sample> batch) const;

    /// Xavier-uniform weights, zero biases.
    void xavier_init(Rng& rng);

    const std::vector<detail::Layer>& layers() const noexcept { return layers_; }

protected:
    void add_dense(int in, int out);
    void add_conv1d(int in_ch, int out_ch, int kernel, int in_len);
    void add_tanh(int width);
    void finalize();

private:
    std::vector<detail::Layer> layers_;
    std::vector<double> params_;
};

/// Fully connected network; tanh on hidden layers, identity on the output.
class MlpModel : public SequentialModel {
public:
    /// widths = {input, hidden..., 2}. Every width must be >= 1.
    explicit MlpModel(std::vector<int> widths);
    const std::vector<int>& widths() const noexcept { return widths_; }

private:
    std::vector<int> widths_;
};

/// conv(k, filters) -> tanh -> conv(k, filters) -> tanh -> flatten ->
/// dense(hidden) -> tanh -> dense(2). Input is a single-channel sequence.
class CnnModel : public SequentialModel {
public:
    explicit CnnModel(int input_len, int filters = 16, int kernel = 2, int hidden = 32);
    int input_len() const noexcept { return input_len_; }
    int filters() const noexcept { return filters_; }
    int kernel() const noexcept { return kernel_; }
    int hidden() const noexcept { return hidden_; }

private:
    int input_len_;
    int filters_;
    int kernel_;
    int hidden_;
};

struct RbfCenters {
    std::vector<std::vector<double>> centers;
    std::vector<double> widths;
};

/// Gaussian kernels exp(-|x-c|^2 / (2 s^2)) feeding a linear 2-output layer.
/// Only the output weights and biases are trainable.
class RbfModel {
public:
    RbfModel(std::vector<std::vector<double>> centers, std::vector<double> widths);
    explicit RbfModel(RbfCenters init) : RbfModel(std::move(init.centers), std::move(init.widths)) {}

    int input_width() const noexcept { return input_width_; }
    std::size_t center_count() const noexcept { return widths_.size(); }
    const std::vector<double>& centers_flat() const noexcept { return centers_; }
    const std::vector<double>& widths() const noexcept { return widths_; }

    /// Output weights (2 x k, row-major) followed by the two biases.
    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    std::vector<double> activations(std::span<const double> x) const;
    Point2D forward(std::span<const double> x) const;
    LossGrad loss_and_gradients(std::span<const Sample> batch) const;

    void xavier_init(Rng& rng);

    /// Solves the output layer by ridge-regularized least squares. With
    /// ridge == 0 the minimum-norm least-squares solution is used.
    void fit_output(std::span<const Sample> data, double ridge = 1e-6);

private:
    int input_width_ = 0;
    std::vector<double> centers_;  // k x input_width
    std::vector<double> widths_;
    std::vector<double> params_;
};

using Model = std::variant<MlpModel, RbfModel, CnnModel>;

Family family(const Model& m) noexcept;
int input_width(const Model& m) noexcept;
std::span<double> trainable_params(Model& m) noexcept;
std::span<const double> trainable_params(const Model& m) noexcept;

/// Throws std::invalid_argument on an input-width mismatch.
Point2D forward(const Model& m, std::span<const double> x);
LossGrad loss_and_gradients(const Model& m, std::span<const Sample> batch);

/// k-means++ seeding followed by exactly 50 Lloyd iterations (ties go to the
/// lowest center index). Width of each center = mean distance to its two
/// nearest other centers. Duplicate points never yield duplicate centers, so
/// fewer than k centers come back when the data has fewer distinct points.
RbfCenters init_rbf_centers(std::span<const std::vector<double>> points, std::size_t k,
                            std::uint64_t seed);

struct ModelShape {
    int hidden = 32;       // MLP hidden width and CNN dense width
    int hidden_layers = 2; // MLP only
    int filters = 16;      // CNN only
    int kernel = 2;        // CNN only
    std::size_t rbf_centers = 40;
    double rbf_ridge = 1e-6;
};

/// Randomly initialized model of the given family. RBF centers are placed on
/// `data` features; other families ignore `data`.
Model make_model(Family f, int input_width, std::span<const Sample> data, std::uint64_t seed,
                 const ModelShape& shape = {});

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t iterations = 1000;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainResult {
    Model model;
    std::vector<double> loss_history;  // batch loss before each update
};

/// Mini-batch SGD for exactly cfg.iterations steps. The data order is
/// reshuffled every epoch from cfg.seed; the final partial batch of an epoch
/// is used as-is.
TrainResult train(Model model, std::span<const Sample> data, const TrainConfig& cfg);

using GradientFn = std::function<LossGrad(const Model&, std::span<const Sample>)>;

/// Largest |g - fd| / max(|g| + |fd|, 1e-6) over all trainable parameters,
/// where fd is the central difference with step h.
double gradient_check(const Model& m, std::span<const Sample> batch, double h = 1e-5,
                      const GradientFn& analytic = {});

/// Versioned JSON document; `extra` is stored verbatim under "normalization".
nlohmann::json model_to_json(const Model& m, const nlohmann::json& extra = nullptr);
Model model_from_json(const nlohmann::json& j);

}  // namespace locus::neural
