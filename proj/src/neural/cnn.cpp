#include <stdexcept>

#include "locus/neural.hpp"

namespace locus::neural {

CnnModel::CnnModel(int input_len, int filters, int kernel, int hidden)
    : input_len_(input_len), filters_(filters), kernel_(kernel), hidden_(hidden) {
    if (kernel < 1 || input_len < 2 * kernel - 1)
        throw std::invalid_argument("CNN input too short for two convolutions");
    if (filters < 1 || hidden < 1) throw std::invalid_argument("CNN widths must be >= 1");
    const int len1 = input_len - kernel + 1;
    const int len2 = len1 - kernel + 1;
    add_conv1d(1, filters, kernel, input_len);
    add_tanh(filters * len1);
    add_conv1d(filters, filters, kernel, len1);
    add_tanh(filters * len2);
    // Flatten is the identity on the channel-major buffer.
    add_dense(filters * len2, hidden);
    add_tanh(hidden);
    add_dense(hidden, 2);
    finalize();
}

}  // namespace locus::neural
