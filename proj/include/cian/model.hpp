#pragma once

// The two NLI classifiers: the character-level intra-attention network and
// the word-level BiLSTM baseline, sharing one encoder spine. Premise and
// hypothesis are encoded by the same parameter tensors (siamese).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cian/charcnn.hpp"
#include "cian/chars.hpp"
#include "cian/encoder.hpp"
#include "cian/tensor.hpp"

namespace cian {

// Fixed label encoding, also the order of logits and probabilities.
inline constexpr std::array<const char*, 3> kLabelNames = {"entailment", "neutral",
                                                           "contradiction"};

enum class Variant { cian, baseline };
enum class Pooling { attention, average };
enum class HeadActivation { relu, tanh };

const char* to_string(Variant v);
const char* to_string(Pooling p);
const char* to_string(HeadActivation h);

struct ModelConfig {
    Variant variant = Variant::cian;

    // character pipeline (cian)
    std::size_t char_dim = 15;
    std::size_t l_max = 20;
    std::vector<std::size_t> filter_widths;  // parallel to filter_counts
    std::vector<std::size_t> filter_counts;
    std::size_t highway_layers = 2;

    // word-embedding pipeline (baseline)
    std::size_t word_dim = 300;

    std::size_t hidden_dim = 300;
    std::size_t classifier_hidden = 400;
    double dropout_rate = 0.2;
    Pooling pooling = Pooling::attention;
    HeadActivation head = HeadActivation::relu;
    // off by default: plain [h_p; h_h] is the published pair combination; the
    // [h_p; h_h; |h_p-h_h|; h_p*h_h] enrichment is an opt-in ablation
    bool enriched_pair_features = false;
    std::uint64_t seed = 1;

    static ModelConfig cian_paper();
    static ModelConfig baseline_paper();
    // small configs that overfit the shipped tiny corpus in seconds
    static ModelConfig cian_toy();
    static ModelConfig baseline_toy();

    void validate() const;  // throws ConfigError

    std::size_t word_vec_dim() const;          // per-word input to the BiLSTM
    std::size_t state_dim() const;             // 2 * hidden_dim
    std::size_t classifier_input_dim() const;  // 2 or 4 encoder outputs
    // embedding, [conv, highway,] bilstm, pooling, dense, softmax
    std::size_t layer_count() const;

    nlohmann::json to_json() const;
    static ModelConfig from_json(const nlohmann::json& j);
};

struct PairSample {
    TokenizedSentence premise;
    TokenizedSentence hypothesis;
    std::size_t label = 0;
    std::string id;
};

struct Prediction {
    std::array<double, 3> probabilities{};
    std::size_t label = 0;
    // (word, weight) pairs; filled only under attention pooling
    std::vector<std::pair<std::string, double>> premise_attention;
    std::vector<std::pair<std::string, double>> hypothesis_attention;
};

class Model {
public:
    explicit Model(ModelConfig cfg);
    Model(ModelConfig cfg, std::vector<std::string> vocab);  // baseline with known words

    const ModelConfig& config() const { return cfg_; }
    const CharAlphabet& alphabet() const { return alphabet_; }
    Rng& rng() { return rng_; }

    // All learnable tensors under their stable dotted names.
    NamedParams params() const;

    TokenizedSentence tokenize(const std::string& text) const;

    // Word list of a baseline vocabulary, in first-seen order, "<unk>" first.
    static std::vector<std::string> collect_vocab(const std::vector<PairSample>& data);
    const std::vector<std::string>& vocab() const { return vocab_words_; }

    // Overwrites (or appends) word-table rows from a plain-text file of
    // "word v1 ... v_word_dim" lines.
    void load_word_vectors(const std::string& path);

    EncoderOutput encode_sentence(Tape& tape, const TokenizedSentence& sentence, Mode mode);
    EncoderOutput encode_sentence_masked(Tape& tape, const TokenizedSentence& sentence,
                                         const std::vector<std::uint8_t>& mask, Mode mode);
    std::pair<EncoderOutput, EncoderOutput> encode_pair(Tape& tape,
                                                        const TokenizedSentence& premise,
                                                        const TokenizedSentence& hypothesis,
                                                        Mode mode);

    Tensor classify_logits(Tape& tape, const Tensor& h_p, const Tensor& h_h);

    // Mean cross-entropy over the batch; runs backward, leaving gradients in
    // the parameters for the optimizer.
    double loss_and_grad(const std::vector<PairSample>& batch, Mode mode = Mode::train);

    Prediction predict(const TokenizedSentence& premise, const TokenizedSentence& hypothesis);
    Prediction predict(const std::string& premise, const std::string& hypothesis);

private:
    Tensor word_feature(Tape& tape, const TokenizedSentence& sentence, std::size_t k, Mode mode);
    std::size_t vocab_row(const std::string& word) const;

    ModelConfig cfg_;
    Rng rng_;
    CharAlphabet alphabet_;

    // cian pipeline
    std::optional<CharEmbeddingTable> char_table_;
    std::optional<CharCnnEncoder> char_encoder_;

    // baseline pipeline; row 0 is the shared randomly initialized OOV row
    std::vector<std::string> vocab_words_;
    std::unordered_map<std::string, std::size_t> vocab_index_;
    Tensor word_table_;

    BiLstmParams bilstm_;
    AttentionParams attention_;  // present only under attention pooling

    Tensor head_weights_, head_bias_;      // classifier.W1, classifier.b1
    Tensor logit_weights_, logit_bias_;    // classifier.W2, classifier.b2
};

}  // namespace cian
