#include <cmath>
#include <stdexcept>

#include "locus/kernels.hpp"
#include "locus/neural.hpp"

namespace locus::neural {

namespace detail {

std::size_t Layer::in_size() const noexcept {
    return kind == Kind::conv1d ? static_cast<std::size_t>(in_ch * in_len)
                                : static_cast<std::size_t>(in_ch);
}

std::size_t Layer::out_size() const noexcept {
    switch (kind) {
        case Kind::dense: return static_cast<std::size_t>(out_ch);
        case Kind::conv1d: return static_cast<std::size_t>(out_ch * out_len());
        case Kind::tanh: return static_cast<std::size_t>(in_ch);
    }
    return 0;
}

std::size_t Layer::param_count() const noexcept {
    switch (kind) {
        case Kind::dense: return static_cast<std::size_t>(out_ch) * (static_cast<std::size_t>(in_ch) + 1);
        case Kind::conv1d:
            return static_cast<std::size_t>(out_ch) * (static_cast<std::size_t>(in_ch * kernel) + 1);
        case Kind::tanh: return 0;
    }
    return 0;
}

}  // namespace detail

namespace {

using detail::Layer;

// im2col for one output position: col[c*K + k] = in[c*L + t + k].
void gather_window(const Layer& l, std::span<const double> in, int t, std::span<double> col) {
    for (int c = 0; c < l.in_ch; ++c)
        for (int k = 0; k < l.kernel; ++k)
            col[static_cast<std::size_t>(c * l.kernel + k)] = in[static_cast<std::size_t>(c * l.in_len + t + k)];
}

void layer_forward(const Layer& l, std::span<const double> p, std::span<const double> in,
                   std::span<double> out, std::vector<double>& col) {
    switch (l.kind) {
        case Layer::Kind::dense: {
            const auto w = p.subspan(l.offset, static_cast<std::size_t>(l.out_ch * l.in_ch));
            const auto b = p.subspan(l.offset + w.size(), static_cast<std::size_t>(l.out_ch));
            kernels::gemv(w, in, b, out);
            return;
        }
        case Layer::Kind::conv1d: {
            const std::size_t width = static_cast<std::size_t>(l.in_ch * l.kernel);
            const auto w = p.subspan(l.offset, static_cast<std::size_t>(l.out_ch) * width);
            const auto b = p.subspan(l.offset + w.size(), static_cast<std::size_t>(l.out_ch));
            col.resize(width);
            const int len = l.out_len();
            for (int t = 0; t < len; ++t) {
                gather_window(l, in, t, col);
                for (int f = 0; f < l.out_ch; ++f)
                    out[static_cast<std::size_t>(f * len + t)] =
                        b[static_cast<std::size_t>(f)] + kernels::dot(w.subspan(f * width, width), col);
            }
            return;
        }
        case Layer::Kind::tanh:
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
            return;
    }
}

// Accumulates parameter gradients into g and, when din is non-empty, writes
// the gradient with respect to the layer input.
void layer_backward(const Layer& l, std::span<const double> p, std::span<const double> in,
                    std::span<const double> out, std::span<const double> dout, std::span<double> g,
                    std::span<double> din, std::vector<double>& col, std::vector<double>& dcol) {
    switch (l.kind) {
        case Layer::Kind::dense: {
            const std::size_t n = static_cast<std::size_t>(l.in_ch);
            const std::size_t wsize = static_cast<std::size_t>(l.out_ch) * n;
            if (!din.empty()) std::fill(din.begin(), din.end(), 0.0);
            for (std::size_t r = 0; r < static_cast<std::size_t>(l.out_ch); ++r) {
                const double d = dout[r];
                kernels::axpy(d, in, g.subspan(l.offset + r * n, n));
                g[l.offset + wsize + r] += d;
                if (!din.empty()) kernels::axpy(d, p.subspan(l.offset + r * n, n), din);
            }
            return;
        }
        case Layer::Kind::conv1d: {
            const std::size_t width = static_cast<std::size_t>(l.in_ch * l.kernel);
            const std::size_t wsize = static_cast<std::size_t>(l.out_ch) * width;
            col.resize(width);
            dcol.resize(width);
            if (!din.empty()) std::fill(din.begin(), din.end(), 0.0);
            const int len = l.out_len();
            for (int t = 0; t < len; ++t) {
                gather_window(l, in, t, col);
                std::fill(dcol.begin(), dcol.end(), 0.0);
                for (int f = 0; f < l.out_ch; ++f) {
                    const double d = dout[static_cast<std::size_t>(f * len + t)];
                    const std::size_t row = l.offset + static_cast<std::size_t>(f) * width;
                    kernels::axpy(d, col, g.subspan(row, width));
                    g[l.offset + wsize + static_cast<std::size_t>(f)] += d;
                    if (!din.empty()) kernels::axpy(d, p.subspan(row, width), dcol);
                }
                if (!din.empty()) {
                    for (int c = 0; c < l.in_ch; ++c)
                        for (int k = 0; k < l.kernel; ++k)
                            din[static_cast<std::size_t>(c * l.in_len + t + k)] +=
                                dcol[static_cast<std::size_t>(c * l.kernel + k)];
                }
            }
            return;
        }
        case Layer::Kind::tanh:
            for (std::size_t i = 0; i < din.size(); ++i) din[i] = dout[i] * (1.0 - out[i] * out[i]);
            return;
    }
}

}  // namespace

int SequentialModel::input_width() const noexcept {
    return layers_.empty() ? 0 : static_cast<int>(layers_.front().in_size());
}

void SequentialModel::add_dense(int in, int out) {
    if (in < 1 || out < 1) throw std::invalid_argument("dense layer widths must be >= 1");
    layers_.push_back({Layer::Kind::dense, in, out, 0, 1, 0});
}

void SequentialModel::add_conv1d(int in_ch, int out_ch, int kernel, int in_len) {
    if (in_ch < 1 || out_ch < 1 || kernel < 1 || in_len < kernel)
        throw std::invalid_argument("invalid convolution layer shape");
    layers_.push_back({Layer::Kind::conv1d, in_ch, out_ch, kernel, in_len, 0});
}

void SequentialModel::add_tanh(int width) { layers_.push_back({Layer::Kind::tanh, width, width, 0, 1, 0}); }

void SequentialModel::finalize() {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (i > 0 && layers_[i].in_size() != layers_[i - 1].out_size())
            throw std::invalid_argument("layer dimensions do not chain");
        layers_[i].offset = offset;
        offset += layers_[i].param_count();
    }
    if (layers_.empty() || layers_.back().out_size() != 2)
        throw std::invalid_argument("network must end in 2 outputs");
    params_.assign(offset, 0.0);
}

void SequentialModel::xavier_init(Rng& rng) {
    for (const Layer& l : layers_) {
        if (l.kind == Layer::Kind::tanh) continue;
        const int k = l.kind == Layer::Kind::conv1d ? l.kernel : 1;
        const double fan_in = static_cast<double>(l.in_ch * k);
        const double fan_out = static_cast<double>(l.out_ch * k);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> u(-limit, limit);
        const std::size_t wsize = l.param_count() - static_cast<std::size_t>(l.out_ch);
        for (std::size_t i = 0; i < wsize; ++i) params_[l.offset + i] = u(rng);
        for (std::size_t i = wsize; i < l.param_count(); ++i) params_[l.offset + i] = 0.0;
    }
}

Point2D SequentialModel::forward(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(input_width()))
        throw std::invalid_argument("feature width does not match model input");
    std::vector<double> cur(x.begin(), x.end());
    std::vector<double> next;
    std::vector<double> col;
    for (const Layer& l : layers_) {
        next.assign(l.out_size(), 0.0);
        layer_forward(l, params_, cur, next, col);
        cur.swap(next);
    }
    return {cur[0], cur[1]};
}

LossGrad SequentialModel::loss_and_gradients(std::span<const Sample> batch) const {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::size_t nl = layers_.size();
    std::vector<std::vector<double>> acts(nl + 1);
    std::vector<std::vector<double>> deltas(nl + 1);
    for (std::size_t i = 0; i < nl; ++i) {
        acts[i + 1].resize(layers_[i].out_size());
        deltas[i + 1].resize(layers_[i].out_size());
    }
    std::vector<double> col;
    std::vector<double> dcol;

    LossGrad out;
    out.grad.assign(params_.size(), 0.0);
    const double n = static_cast<double>(batch.size());
    double sse = 0.0;
    for (const Sample& s : batch) {
        if (s.x.size() != static_cast<std::size_t>(input_width()))
            throw std::invalid_argument("feature width does not match model input");
        acts[0].assign(s.x.begin(), s.x.end());
        for (std::size_t i = 0; i < nl; ++i) layer_forward(layers_[i], params_, acts[i], acts[i + 1], col);

        const auto& y = acts[nl];
        const double e0 = y[0] - s.y.x;
        const double e1 = y[1] - s.y.y;
        sse += e0 * e0 + e1 * e1;
        // d/dy of (e0^2 + e1^2) / (2n)
        deltas[nl][0] = e0 / n;
        deltas[nl][1] = e1 / n;
        for (std::size_t i = nl; i-- > 0;) {
            std::span<double> din = i == 0 ? std::span<double>{} : std::span<double>(deltas[i]);
            layer_backward(layers_[i], params_, acts[i], acts[i + 1], deltas[i + 1], out.grad, din, col, dcol);
        }
    }
    out.loss = sse / (2.0 * n);
    return out;
}

MlpModel::MlpModel(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw std::invalid_argument("MLP needs at least input and output widths");
    for (int w : widths_)
        if (w < 1) throw std::invalid_argument("MLP layer widths must be >= 1");
    if (widths_.back() != 2) throw std::invalid_argument("MLP output width must be 2");
    for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
        add_dense(widths_[i], widths_[i + 1]);
        if (i + 2 < widths_.size()) add_tanh(widths_[i + 1]);
    }
    finalize();
}

}  // namespace locus::neural
