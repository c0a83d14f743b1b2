#pragma once

// Sentence encoder: BiLSTM over word vectors, pooled to a single sentence
// representation by intra attention or by average pooling.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cian/tensor.hpp"

namespace cian {

// One direction's gate parameters over the concatenated [input; hidden] vector.
struct LstmParams {
    Tensor input_weights, input_bias;          // W_i, b_i
    Tensor forget_weights, forget_bias;        // W_f, b_f (bias starts at 1.0)
    Tensor output_weights, output_bias;        // W_o, b_o
    Tensor candidate_weights, candidate_bias;  // W_g, b_g

    LstmParams() = default;
    LstmParams(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);

    std::size_t hidden_dim() const { return input_weights.rows(); }
    std::size_t input_dim() const { return input_weights.cols() - hidden_dim(); }

    // prefix is e.g. "bilstm.fwd"; adds "<prefix>.W_i", "<prefix>.b_i", ...
    void collect_params(const std::string& prefix, NamedParams& out) const;
};

struct LstmState {
    Tensor h;  // [hidden]
    Tensor c;  // [hidden]
};

struct BiLstmParams {
    LstmParams fwd;
    LstmParams bwd;

    BiLstmParams() = default;
    BiLstmParams(std::size_t input_dim, std::size_t hidden_dim, Rng& rng)
        : fwd(input_dim, hidden_dim, rng), bwd(input_dim, hidden_dim, rng) {}

    std::size_t state_dim() const { return 2 * fwd.hidden_dim(); }
    void collect_params(NamedParams& out) const;
};

struct AttentionParams {
    Tensor context_weights;  // W_omega [dim x dim]
    Tensor context_bias;     // b_omega [dim]
    Tensor context_vector;   // u_omega [dim]

    AttentionParams() = default;
    AttentionParams(std::size_t dim, Rng& rng);

    std::size_t dim() const { return context_vector.size(); }
    void collect_params(NamedParams& out) const;
};

// Per-sentence encoder result. attention_weights is an empty tensor under
// average pooling; otherwise it is [n] with exact zeros at masked positions.
struct EncoderOutput {
    std::vector<Tensor> hidden_states;  // n entries, each [2*hidden]; zeros where masked
    Tensor pooled;                      // [2*hidden]
    Tensor attention_weights;
    std::vector<std::uint8_t> mask;
};

// Standard LSTM gate equations: i,f,o = sigmoid, g = tanh over W [x; h] + b,
// c' = f*c + i*g, h' = o * tanh(c').
LstmState lstm_step(Tape& tape, const Tensor& x_t, const LstmState& state, const LstmParams& p);

// Runs both directions over the unmasked prefix; h_t = [fwd_t; bwd_t]. Masked
// positions yield zero vectors, so padding never reaches a real state.
std::vector<Tensor> bilstm_forward(Tape& tape, const std::vector<Tensor>& inputs,
                                   const std::vector<std::uint8_t>& mask, const BiLstmParams& p);

// Arithmetic mean of the unmasked hidden states.
Tensor average_pool(Tape& tape, const std::vector<Tensor>& hidden_states,
                    const std::vector<std::uint8_t>& mask);

// u_t = tanh(W_omega h_t + b_omega); alpha = softmax over unmasked t of
// u_t . u_omega; pooled = sum_t alpha_t h_t. Returns (pooled, alpha) where
// alpha is a value-only [n] tensor with exact zeros at masked positions.
std::pair<Tensor, Tensor> intra_attention(Tape& tape, const std::vector<Tensor>& hidden_states,
                                          const std::vector<std::uint8_t>& mask,
                                          const AttentionParams& p);

}  // namespace cian
