#include "cian/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cian/error.hpp"

namespace cian {

const char* to_string(Variant v) { return v == Variant::cian ? "cian" : "baseline"; }
const char* to_string(Pooling p) { return p == Pooling::attention ? "attention" : "average"; }
const char* to_string(HeadActivation h) { return h == HeadActivation::relu ? "relu" : "tanh"; }

namespace {

Variant variant_from(const std::string& s) {
    if (s == "cian") return Variant::cian;
    if (s == "baseline") return Variant::baseline;
    throw ConfigError("unknown variant '" + s + "' (expected cian|baseline)");
}

Pooling pooling_from(const std::string& s) {
    if (s == "attention") return Pooling::attention;
    if (s == "average") return Pooling::average;
    throw ConfigError("unknown pooling '" + s + "' (expected attention|average)");
}

HeadActivation head_from(const std::string& s) {
    if (s == "relu") return HeadActivation::relu;
    if (s == "tanh") return HeadActivation::tanh;
    throw ConfigError("unknown head activation '" + s + "' (expected relu|tanh)");
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig
// ---------------------------------------------------------------------------

ModelConfig ModelConfig::cian_paper() {
    ModelConfig cfg;
    cfg.variant = Variant::cian;
    cfg.char_dim = 15;
    cfg.l_max = 20;
    cfg.filter_widths = {1, 2, 3, 4, 5, 6, 7};
    cfg.filter_counts = ConvFilterBank::default_counts(cfg.filter_widths);
    cfg.highway_layers = 2;
    cfg.hidden_dim = 300;
    cfg.classifier_hidden = 400;
    cfg.dropout_rate = 0.2;
    cfg.pooling = Pooling::attention;
    cfg.head = HeadActivation::relu;
    return cfg;
}

ModelConfig ModelConfig::baseline_paper() {
    ModelConfig cfg;
    cfg.variant = Variant::baseline;
    cfg.word_dim = 300;
    cfg.hidden_dim = 300;
    cfg.classifier_hidden = 400;
    cfg.dropout_rate = 0.2;
    cfg.pooling = Pooling::average;
    cfg.head = HeadActivation::tanh;
    return cfg;
}

ModelConfig ModelConfig::cian_toy() {
    ModelConfig cfg = cian_paper();
    cfg.char_dim = 8;
    cfg.l_max = 12;
    cfg.filter_widths = {1, 2, 3};
    cfg.filter_counts = {8, 16, 24};
    cfg.hidden_dim = 32;
    cfg.classifier_hidden = 32;
    cfg.dropout_rate = 0.0;
    return cfg;
}

ModelConfig ModelConfig::baseline_toy() {
    ModelConfig cfg = baseline_paper();
    cfg.word_dim = 24;
    cfg.hidden_dim = 32;
    cfg.classifier_hidden = 32;
    cfg.dropout_rate = 0.0;
    return cfg;
}

void ModelConfig::validate() const {
    if (hidden_dim == 0 || classifier_hidden == 0)
        throw ConfigError("config: hidden dimensions must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("config: dropout rate must be in [0, 1)");
    if (variant == Variant::cian) {
        if (char_dim == 0) throw ConfigError("config: char_dim must be positive");
        if (filter_widths.empty() || filter_widths.size() != filter_counts.size())
            throw ConfigError("config: filter widths and counts must be non-empty and parallel");
        const std::size_t w_max = *std::max_element(filter_widths.begin(), filter_widths.end());
        if (l_max < w_max)
            throw ConfigError("config: l_max " + std::to_string(l_max) +
                              " smaller than widest filter " + std::to_string(w_max));
    } else if (word_dim == 0) {
        throw ConfigError("config: word_dim must be positive");
    }
}

std::size_t ModelConfig::word_vec_dim() const {
    if (variant == Variant::baseline) return word_dim;
    return std::accumulate(filter_counts.begin(), filter_counts.end(), std::size_t{0});
}

std::size_t ModelConfig::state_dim() const { return 2 * hidden_dim; }

std::size_t ModelConfig::classifier_input_dim() const {
    return (enriched_pair_features ? 4 : 2) * state_dim();
}

std::size_t ModelConfig::layer_count() const {
    // embedding, bilstm, pooling, dense, softmax; cian adds conv + highway
    return variant == Variant::cian ? 7 : 5;
}

nlohmann::json ModelConfig::to_json() const {
    nlohmann::json j;
    j["variant"] = to_string(variant);
    j["char_dim"] = char_dim;
    j["l_max"] = l_max;
    j["filter_widths"] = filter_widths;
    j["filter_counts"] = filter_counts;
    j["highway_layers"] = highway_layers;
    j["word_dim"] = word_dim;
    j["hidden_dim"] = hidden_dim;
    j["classifier_hidden"] = classifier_hidden;
    j["dropout_rate"] = dropout_rate;
    j["pooling"] = to_string(pooling);
    j["head"] = to_string(head);
    j["enriched_pair_features"] = enriched_pair_features;
    j["seed"] = seed;
    return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    // Start from the faithful preset for the variant, then apply overrides.
    const Variant v = variant_from(j.value("variant", std::string("cian")));
    ModelConfig cfg = v == Variant::cian ? cian_paper() : baseline_paper();
    cfg.char_dim = j.value("char_dim", cfg.char_dim);
    cfg.l_max = j.value("l_max", cfg.l_max);
    if (j.contains("filter_widths")) {
        cfg.filter_widths = j.at("filter_widths").get<std::vector<std::size_t>>();
        cfg.filter_counts = j.contains("filter_counts")
                                ? j.at("filter_counts").get<std::vector<std::size_t>>()
                                : ConvFilterBank::default_counts(cfg.filter_widths);
    } else if (j.contains("filter_counts")) {
        cfg.filter_counts = j.at("filter_counts").get<std::vector<std::size_t>>();
    }
    cfg.highway_layers = j.value("highway_layers", cfg.highway_layers);
    cfg.word_dim = j.value("word_dim", cfg.word_dim);
    cfg.hidden_dim = j.value("hidden_dim", cfg.hidden_dim);
    cfg.classifier_hidden = j.value("classifier_hidden", cfg.classifier_hidden);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    if (j.contains("pooling")) cfg.pooling = pooling_from(j.at("pooling").get<std::string>());
    if (j.contains("head")) cfg.head = head_from(j.at("head").get<std::string>());
    cfg.enriched_pair_features = j.value("enriched_pair_features", cfg.enriched_pair_features);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

Model::Model(ModelConfig cfg) : Model(std::move(cfg), {}) {}

Model::Model(ModelConfig cfg, std::vector<std::string> vocab)
    : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    cfg_.validate();
    if (cfg_.variant == Variant::cian) {
        char_table_.emplace(cfg_.char_dim, rng_);
        char_encoder_.emplace(cfg_.char_dim, cfg_.filter_widths, cfg_.filter_counts,
                              cfg_.highway_layers, rng_);
    } else {
        vocab_words_.push_back("<unk>");
        for (auto& w : vocab)
            if (w != "<unk>") vocab_words_.push_back(std::move(w));
        for (std::size_t i = 0; i < vocab_words_.size(); ++i) vocab_index_[vocab_words_[i]] = i;
        word_table_ = Tensor::uniform({vocab_words_.size(), cfg_.word_dim}, rng_);
    }
    bilstm_ = BiLstmParams(cfg_.word_vec_dim(), cfg_.hidden_dim, rng_);
    if (cfg_.pooling == Pooling::attention) attention_ = AttentionParams(cfg_.state_dim(), rng_);
    head_weights_ = Tensor::uniform({cfg_.classifier_hidden, cfg_.classifier_input_dim()}, rng_);
    head_bias_ = Tensor({cfg_.classifier_hidden}, true);
    logit_weights_ = Tensor::uniform({3, cfg_.classifier_hidden}, rng_);
    logit_bias_ = Tensor({3}, true);
}

NamedParams Model::params() const {
    NamedParams out;
    if (cfg_.variant == Variant::cian) {
        char_table_->collect_params(out);
        char_encoder_->collect_params(out);
    } else {
        out.push_back({"wordemb.table", word_table_});
    }
    bilstm_.collect_params(out);
    if (cfg_.pooling == Pooling::attention) attention_.collect_params(out);
    out.push_back({"classifier.W1", head_weights_});
    out.push_back({"classifier.b1", head_bias_});
    out.push_back({"classifier.W2", logit_weights_});
    out.push_back({"classifier.b2", logit_bias_});
    return out;
}

TokenizedSentence Model::tokenize(const std::string& text) const {
    return tokenize_and_vectorize(text, alphabet_);
}

std::vector<std::string> Model::collect_vocab(const std::vector<PairSample>& data) {
    std::vector<std::string> words{"<unk>"};
    std::unordered_map<std::string, std::size_t> seen{{"<unk>", 0}};
    auto absorb = [&](const TokenizedSentence& s) {
        for (const auto& w : s.words)
            if (seen.emplace(w, words.size()).second) words.push_back(w);
    };
    for (const auto& ex : data) {
        absorb(ex.premise);
        absorb(ex.hypothesis);
    }
    return words;
}

std::size_t Model::vocab_row(const std::string& word) const {
    auto it = vocab_index_.find(word);
    return it == vocab_index_.end() ? 0 : it->second;
}

void Model::load_word_vectors(const std::string& path) {
    if (cfg_.variant != Variant::baseline)
        throw ConfigError("word vectors apply to the baseline variant only");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open word-vector file: " + path);

    std::vector<double> grown(word_table_.data());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<double> vec;
        vec.reserve(cfg_.word_dim);
        double v;
        while (ss >> v) vec.push_back(v);
        if (vec.size() != cfg_.word_dim)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(cfg_.word_dim) + " values, got " +
                            std::to_string(vec.size()));
        auto it = vocab_index_.find(word);
        std::size_t row;
        if (it != vocab_index_.end()) {
            row = it->second;
        } else {
            row = vocab_words_.size();
            vocab_words_.push_back(word);
            vocab_index_[word] = row;
            grown.resize(grown.size() + cfg_.word_dim);
        }
        std::copy(vec.begin(), vec.end(), grown.begin() + row * cfg_.word_dim);
    }
    word_table_ = Tensor::from({vocab_words_.size(), cfg_.word_dim}, std::move(grown), true);
}

Tensor Model::word_feature(Tape& tape, const TokenizedSentence& sentence, std::size_t k,
                           Mode mode) {
    Tensor f;
    if (cfg_.variant == Variant::cian) {
        Tensor c = char_table_->embed_word(tape, sentence.chars[k], cfg_.l_max);
        f = char_encoder_->encode_word(tape, c);
    } else {
        f = take_row(tape, word_table_, vocab_row(sentence.words[k]));
    }
    // dropout sits on the BiLSTM inputs only
    return dropout(tape, f, cfg_.dropout_rate, mode, rng_);
}

EncoderOutput Model::encode_sentence(Tape& tape, const TokenizedSentence& sentence, Mode mode) {
    if (sentence.word_count() == 0) throw EmptySentenceError("encode: empty sentence");
    return encode_sentence_masked(tape, sentence,
                                  std::vector<std::uint8_t>(sentence.word_count(), 1), mode);
}

EncoderOutput Model::encode_sentence_masked(Tape& tape, const TokenizedSentence& sentence,
                                            const std::vector<std::uint8_t>& mask, Mode mode) {
    if (sentence.word_count() != mask.size())
        throw DimensionError("encode: " + std::to_string(sentence.word_count()) + " words vs " +
                             std::to_string(mask.size()) + " mask entries");
    const std::size_t n = sentence.word_count();
    std::vector<Tensor> inputs(n);
    for (std::size_t t = 0; t < n; ++t)
        inputs[t] =
            mask[t] ? word_feature(tape, sentence, t, mode) : Tensor({cfg_.word_vec_dim()});

    EncoderOutput out;
    out.mask = mask;
    out.hidden_states = bilstm_forward(tape, inputs, mask, bilstm_);
    if (cfg_.pooling == Pooling::attention) {
        auto [pooled, alpha] = intra_attention(tape, out.hidden_states, mask, attention_);
        out.pooled = pooled;
        out.attention_weights = alpha;
    } else {
        out.pooled = average_pool(tape, out.hidden_states, mask);
    }
    return out;
}

std::pair<EncoderOutput, EncoderOutput> Model::encode_pair(Tape& tape,
                                                           const TokenizedSentence& premise,
                                                           const TokenizedSentence& hypothesis,
                                                           Mode mode) {
    EncoderOutput p = encode_sentence(tape, premise, mode);
    EncoderOutput h = encode_sentence(tape, hypothesis, mode);
    return {std::move(p), std::move(h)};
}

Tensor Model::classify_logits(Tape& tape, const Tensor& h_p, const Tensor& h_h) {
    if (h_p.size() != cfg_.state_dim() || h_h.size() != cfg_.state_dim())
        throw DimensionError("classify: sentence vectors " + shape_str(h_p.shape()) + ", " +
                             shape_str(h_h.shape()) + ", expected [" +
                             std::to_string(cfg_.state_dim()) + "]");
    std::vector<Tensor> parts{h_p, h_h};
    if (cfg_.enriched_pair_features) {
        parts.push_back(abs(tape, sub(tape, h_p, h_h)));
        parts.push_back(mul(tape, h_p, h_h));
    }
    Tensor x = concat(tape, parts);
    Tensor a = affine(tape, head_weights_, x, head_bias_);
    Tensor z = cfg_.head == HeadActivation::relu ? relu(tape, a) : tanh(tape, a);
    return affine(tape, logit_weights_, z, logit_bias_);
}

double Model::loss_and_grad(const std::vector<PairSample>& batch, Mode mode) {
    if (batch.empty()) throw DataError("loss: empty batch");
    Tape tape;
    Tensor total;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const PairSample& ex = batch[i];
        if (ex.label > 2)
            throw DataError("sample '" + ex.id + "': label " + std::to_string(ex.label) +
                            " out of range");
        auto [p, h] = encode_pair(tape, ex.premise, ex.hypothesis, mode);
        Tensor loss = cross_entropy(tape, classify_logits(tape, p.pooled, h.pooled), ex.label);
        total = i == 0 ? loss : add(tape, total, loss);
    }
    Tensor mean = scale(tape, total, 1.0 / double(batch.size()));
    tape.backward(mean);
    return mean.value();
}

Prediction Model::predict(const TokenizedSentence& premise, const TokenizedSentence& hypothesis) {
    Tape tape;
    auto [p, h] = encode_pair(tape, premise, hypothesis, Mode::eval);
    Tensor logits = classify_logits(tape, p.pooled, h.pooled);
    Tensor probs = softmax(tape, logits);

    Prediction pred;
    for (std::size_t i = 0; i < 3; ++i) pred.probabilities[i] = probs.data()[i];
    pred.label = std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
                 pred.probabilities.begin();
    if (cfg_.pooling == Pooling::attention) {
        for (std::size_t t = 0; t < premise.word_count(); ++t)
            pred.premise_attention.emplace_back(premise.words[t], p.attention_weights.data()[t]);
        for (std::size_t t = 0; t < hypothesis.word_count(); ++t)
            pred.hypothesis_attention.emplace_back(hypothesis.words[t],
                                                   h.attention_weights.data()[t]);
    }
    return pred;
}

Prediction Model::predict(const std::string& premise, const std::string& hypothesis) {
    return predict(tokenize(premise), tokenize(hypothesis));
}

}  // namespace cian
