#include "cian/encoder.hpp"

#include <algorithm>

#include "cian/error.hpp"

namespace cian {

LstmParams::LstmParams(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
    const Shape wshape{hidden_dim, input_dim + hidden_dim};
    input_weights = Tensor::uniform(wshape, rng);
    input_bias = Tensor({hidden_dim}, true);
    forget_weights = Tensor::uniform(wshape, rng);
    forget_bias = Tensor({hidden_dim}, true);
    for (double& v : forget_bias.data()) v = 1.0;
    output_weights = Tensor::uniform(wshape, rng);
    output_bias = Tensor({hidden_dim}, true);
    candidate_weights = Tensor::uniform(wshape, rng);
    candidate_bias = Tensor({hidden_dim}, true);
}

void LstmParams::collect_params(const std::string& prefix, NamedParams& out) const {
    out.push_back({prefix + ".W_i", input_weights});
    out.push_back({prefix + ".b_i", input_bias});
    out.push_back({prefix + ".W_f", forget_weights});
    out.push_back({prefix + ".b_f", forget_bias});
    out.push_back({prefix + ".W_o", output_weights});
    out.push_back({prefix + ".b_o", output_bias});
    out.push_back({prefix + ".W_g", candidate_weights});
    out.push_back({prefix + ".b_g", candidate_bias});
}

void BiLstmParams::collect_params(NamedParams& out) const {
    fwd.collect_params("bilstm.fwd", out);
    bwd.collect_params("bilstm.bwd", out);
}

AttentionParams::AttentionParams(std::size_t dim, Rng& rng) {
    context_weights = Tensor::uniform({dim, dim}, rng);
    context_bias = Tensor({dim}, true);
    context_vector = Tensor::uniform({dim}, rng);
}

void AttentionParams::collect_params(NamedParams& out) const {
    out.push_back({"attention.W_omega", context_weights});
    out.push_back({"attention.b_omega", context_bias});
    out.push_back({"attention.u_omega", context_vector});
}

LstmState lstm_step(Tape& tape, const Tensor& x_t, const LstmState& state, const LstmParams& p) {
    Tensor z = concat(tape, {x_t, state.h});
    Tensor i = sigmoid(tape, affine(tape, p.input_weights, z, p.input_bias));
    Tensor f = sigmoid(tape, affine(tape, p.forget_weights, z, p.forget_bias));
    Tensor o = sigmoid(tape, affine(tape, p.output_weights, z, p.output_bias));
    Tensor g = tanh(tape, affine(tape, p.candidate_weights, z, p.candidate_bias));
    Tensor c = add(tape, mul(tape, f, state.c), mul(tape, i, g));
    Tensor h = mul(tape, o, tanh(tape, c));
    return {h, c};
}

namespace {

// Number of leading unmasked positions; rejects holes so both recurrent
// directions see one contiguous real span.
std::size_t unmasked_prefix(const std::vector<std::uint8_t>& mask) {
    std::size_t n_real = 0;
    while (n_real < mask.size() && mask[n_real]) ++n_real;
    for (std::size_t t = n_real; t < mask.size(); ++t)
        if (mask[t]) throw InvariantError("bilstm: mask must be a contiguous prefix");
    return n_real;
}

}  // namespace

std::vector<Tensor> bilstm_forward(Tape& tape, const std::vector<Tensor>& inputs,
                                   const std::vector<std::uint8_t>& mask, const BiLstmParams& p) {
    if (inputs.empty()) throw DimensionError("bilstm: empty input sequence");
    if (inputs.size() != mask.size())
        throw DimensionError("bilstm: " + std::to_string(inputs.size()) + " inputs vs " +
                             std::to_string(mask.size()) + " mask entries");
    const std::size_t n = inputs.size();
    const std::size_t n_real = unmasked_prefix(mask);
    const std::size_t hidden = p.fwd.hidden_dim();

    std::vector<Tensor> fwd_h(n_real), bwd_h(n_real);
    LstmState state{Tensor({hidden}), Tensor({hidden})};
    for (std::size_t t = 0; t < n_real; ++t) {
        state = lstm_step(tape, inputs[t], state, p.fwd);
        fwd_h[t] = state.h;
    }
    state = {Tensor({hidden}), Tensor({hidden})};
    for (std::size_t t = n_real; t-- > 0;) {
        state = lstm_step(tape, inputs[t], state, p.bwd);
        bwd_h[t] = state.h;
    }

    std::vector<Tensor> out(n);
    for (std::size_t t = 0; t < n; ++t)
        out[t] = t < n_real ? concat(tape, {fwd_h[t], bwd_h[t]}) : Tensor({2 * hidden});
    return out;
}

Tensor average_pool(Tape& tape, const std::vector<Tensor>& hidden_states,
                    const std::vector<std::uint8_t>& mask) {
    Tensor total;
    std::size_t count = 0;
    for (std::size_t t = 0; t < hidden_states.size(); ++t) {
        if (!mask[t]) continue;
        total = count == 0 ? hidden_states[t] : add(tape, total, hidden_states[t]);
        ++count;
    }
    if (count == 0) throw EmptySentenceError("average_pool: no unmasked positions");
    return scale(tape, total, 1.0 / double(count));
}

std::pair<Tensor, Tensor> intra_attention(Tape& tape, const std::vector<Tensor>& hidden_states,
                                          const std::vector<std::uint8_t>& mask,
                                          const AttentionParams& p) {
    std::vector<std::size_t> real;
    for (std::size_t t = 0; t < hidden_states.size(); ++t)
        if (mask[t]) real.push_back(t);
    if (real.empty()) throw EmptySentenceError("intra_attention: no unmasked positions");

    // Importance logits for the real positions only; masked positions are
    // excluded from the normalization, which makes their weights exact zeros.
    std::vector<Tensor> logits;
    logits.reserve(real.size());
    for (std::size_t t : real) {
        Tensor u_t = tanh(tape, affine(tape, p.context_weights, hidden_states[t], p.context_bias));
        logits.push_back(dot(tape, u_t, p.context_vector));
    }
    Tensor alpha = softmax(tape, concat(tape, logits));

    std::vector<Tensor> weights = split(tape, alpha, std::vector<std::size_t>(real.size(), 1));
    Tensor pooled;
    for (std::size_t j = 0; j < real.size(); ++j) {
        Tensor term = mul(tape, hidden_states[real[j]], weights[j]);
        pooled = j == 0 ? term : add(tape, pooled, term);
    }

    Tensor full({hidden_states.size()});
    for (std::size_t j = 0; j < real.size(); ++j) full.data()[real[j]] = alpha.data()[j];
    return {pooled, full};
}

}  // namespace cian
