#pragma once

// Per-word representation: multi-width narrow convolutions with max-over-time
// pooling, followed by a stack of highway layers.

#include <cstddef>
#include <string>
#include <vector>

#include "cian/tensor.hpp"

namespace cian {

struct ConvFilter {
    Tensor weights;  // [d x w]
    Tensor bias;     // scalar
};

// Filters ordered by (width ascending, filter index ascending); that order is
// also the concatenation order of the pooled features and the checkpoint
// naming order, so checkpoints stay portable.
class ConvFilterBank {
public:
    ConvFilterBank(std::size_t char_dim, std::vector<std::size_t> widths,
                   std::vector<std::size_t> counts, Rng& rng);

    // counts min(200, 50*w) per width
    static std::vector<std::size_t> default_counts(const std::vector<std::size_t>& widths);

    std::size_t output_dim() const { return output_dim_; }
    std::size_t max_width() const;
    std::size_t char_dim() const { return char_dim_; }
    const std::vector<std::size_t>& widths() const { return widths_; }
    const std::vector<std::size_t>& counts() const { return counts_; }
    const std::vector<ConvFilter>& filters() const { return filters_; }

    // pooled feature vector y: one max-over-time entry per filter
    Tensor word_feature_vector(Tape& tape, const Tensor& char_matrix) const;

    void collect_params(NamedParams& out) const;

private:
    std::size_t char_dim_;
    std::vector<std::size_t> widths_;
    std::vector<std::size_t> counts_;
    std::vector<ConvFilter> filters_;
    std::size_t output_dim_ = 0;
};

// Single-filter feature map, tanh(<window, weights> + bias) at each position.
Tensor conv_feature(Tape& tape, const Tensor& char_matrix, const ConvFilter& filter);

struct HighwayLayer {
    Tensor transform_weights;  // W_H
    Tensor transform_bias;     // b_H
    Tensor gate_weights;       // W_T
    Tensor gate_bias;          // b_T, initialized to -2 so carry dominates early
};

class Highway {
public:
    Highway(std::size_t dim, std::size_t layers, Rng& rng);

    std::size_t dim() const { return dim_; }
    std::size_t layer_count() const { return layers_.size(); }
    std::vector<HighwayLayer>& layers() { return layers_; }
    const std::vector<HighwayLayer>& layers() const { return layers_; }

    // per layer: t = sigmoid(W_T y + b_T); z = t * tanh(W_H y + b_H) + (1-t) * y
    Tensor forward(Tape& tape, const Tensor& y) const;

    void collect_params(NamedParams& out) const;

private:
    std::size_t dim_;
    std::vector<HighwayLayer> layers_;
};

// Convolution bank + highway stack; the whole per-word pipeline.
class CharCnnEncoder {
public:
    CharCnnEncoder(std::size_t char_dim, std::vector<std::size_t> widths,
                   std::vector<std::size_t> counts, std::size_t highway_layers, Rng& rng);

    std::size_t output_dim() const { return bank_.output_dim(); }
    const ConvFilterBank& bank() const { return bank_; }
    const Highway& highway() const { return highway_; }

    Tensor encode_word(Tape& tape, const Tensor& char_matrix) const;

    void collect_params(NamedParams& out) const;

private:
    ConvFilterBank bank_;
    Highway highway_;
};

}  // namespace cian
