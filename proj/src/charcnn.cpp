#include "cian/charcnn.hpp"

#include <algorithm>

namespace cian {

ConvFilterBank::ConvFilterBank(std::size_t char_dim, std::vector<std::size_t> widths,
                               std::vector<std::size_t> counts, Rng& rng)
    : char_dim_(char_dim), widths_(std::move(widths)), counts_(std::move(counts)) {
    if (widths_.empty() || widths_.size() != counts_.size())
        throw ConfigError("filter bank: widths and counts must be non-empty and parallel");
    for (std::size_t k = 0; k < widths_.size(); ++k) {
        if (widths_[k] == 0 || counts_[k] == 0)
            throw ConfigError("filter bank: zero width or count");
        for (std::size_t i = 0; i < counts_[k]; ++i) {
            ConvFilter f;
            f.weights = Tensor::uniform({char_dim_, widths_[k]}, rng);
            f.bias = Tensor::scalar(0.0, true);
            filters_.push_back(std::move(f));
        }
        output_dim_ += counts_[k];
    }
}

std::vector<std::size_t> ConvFilterBank::default_counts(const std::vector<std::size_t>& widths) {
    std::vector<std::size_t> counts;
    counts.reserve(widths.size());
    for (std::size_t w : widths) counts.push_back(std::min<std::size_t>(200, 50 * w));
    return counts;
}

std::size_t ConvFilterBank::max_width() const {
    return *std::max_element(widths_.begin(), widths_.end());
}

Tensor conv_feature(Tape& tape, const Tensor& char_matrix, const ConvFilter& filter) {
    return conv1d_narrow(tape, char_matrix, filter.weights, filter.bias);
}

Tensor ConvFilterBank::word_feature_vector(Tape& tape, const Tensor& char_matrix) const {
    std::vector<Tensor> pooled;
    pooled.reserve(filters_.size());
    for (const auto& f : filters_)
        pooled.push_back(max_over_time(tape, conv_feature(tape, char_matrix, f)));
    return concat(tape, pooled);
}

void ConvFilterBank::collect_params(NamedParams& out) const {
    std::size_t k = 0;
    for (std::size_t wi = 0; wi < widths_.size(); ++wi) {
        for (std::size_t i = 0; i < counts_[wi]; ++i, ++k) {
            const std::string base =
                "charcnn.w" + std::to_string(widths_[wi]) + ".filter" + std::to_string(i);
            out.push_back({base + ".H", filters_[k].weights});
            out.push_back({base + ".b", filters_[k].bias});
        }
    }
}

Highway::Highway(std::size_t dim, std::size_t layers, Rng& rng) : dim_(dim) {
    layers_.reserve(layers);
    for (std::size_t i = 0; i < layers; ++i) {
        HighwayLayer layer;
        layer.transform_weights = Tensor::uniform({dim, dim}, rng);
        layer.transform_bias = Tensor({dim}, true);
        layer.gate_weights = Tensor::uniform({dim, dim}, rng);
        layer.gate_bias = Tensor({dim}, true);
        for (double& v : layer.gate_bias.data()) v = -2.0;
        layers_.push_back(std::move(layer));
    }
}

Tensor Highway::forward(Tape& tape, const Tensor& y) const {
    if (y.size() != dim_)
        throw DimensionError("highway: input " + shape_str(y.shape()) + ", expected [" +
                             std::to_string(dim_) + "]");
    Tensor z = y;
    Tensor ones({dim_});
    for (double& v : ones.data()) v = 1.0;
    for (const auto& layer : layers_) {
        Tensor t = sigmoid(tape, affine(tape, layer.gate_weights, z, layer.gate_bias));
        Tensor g = tanh(tape, affine(tape, layer.transform_weights, z, layer.transform_bias));
        Tensor carry = sub(tape, ones, t);
        z = add(tape, mul(tape, t, g), mul(tape, carry, z));
    }
    return z;
}

void Highway::collect_params(NamedParams& out) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const std::string base = "highway." + std::to_string(i);
        out.push_back({base + ".W_H", layers_[i].transform_weights});
        out.push_back({base + ".b_H", layers_[i].transform_bias});
        out.push_back({base + ".W_T", layers_[i].gate_weights});
        out.push_back({base + ".b_T", layers_[i].gate_bias});
    }
}

CharCnnEncoder::CharCnnEncoder(std::size_t char_dim, std::vector<std::size_t> widths,
                               std::vector<std::size_t> counts, std::size_t highway_layers,
                               Rng& rng)
    : bank_(char_dim, std::move(widths), std::move(counts), rng),
      highway_(bank_.output_dim(), highway_layers, rng) {}

Tensor CharCnnEncoder::encode_word(Tape& tape, const Tensor& char_matrix) const {
    return highway_.forward(tape, bank_.word_feature_vector(tape, char_matrix));
}

void CharCnnEncoder::collect_params(NamedParams& out) const {
    bank_.collect_params(out);
    highway_.collect_params(out);
}

}  // namespace cian
