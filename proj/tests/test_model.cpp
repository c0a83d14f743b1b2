#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "cian/checkpoint.hpp"
#include "cian/error.hpp"
#include "cian/model.hpp"

using namespace cian;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "cian_model_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

PairSample make_sample(const Model& model, const std::string& premise,
                       const std::string& hypothesis, std::size_t label, std::string id) {
    return {model.tokenize(premise), model.tokenize(hypothesis), label, std::move(id)};
}

Tensor find_param(const NamedParams& params, const std::string& name) {
    for (const auto& p : params)
        if (p.name == name) return p.tensor;
    throw std::runtime_error("missing param in test: " + name);
}

void zero_param(const NamedParams& params, const std::string& name) {
    Tensor t = find_param(params, name);
    std::fill(t.data().begin(), t.data().end(), 0.0);
}

bool params_bit_equal(const NamedParams& a, const NamedParams& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name) return false;
        if (a[i].tensor.shape() != b[i].tensor.shape()) return false;
        if (a[i].tensor.data() != b[i].tensor.data()) return false;
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// ModelConfig
// ---------------------------------------------------------------------------

TEST_CASE("full-size character config has the published dimensions") {
    ModelConfig cfg = ModelConfig::cian_paper();
    cfg.validate();
    CHECK(cfg.filter_counts == std::vector<std::size_t>{50, 100, 150, 200, 200, 200, 200});
    CHECK(cfg.word_vec_dim() == 1100);
    CHECK(cfg.state_dim() == 600);
    CHECK(cfg.classifier_input_dim() == 1200);
    CHECK(cfg.classifier_hidden == 400);
    CHECK(cfg.dropout_rate == 0.2);
    CHECK(cfg.layer_count() == 7);
    CHECK(cfg.pooling == Pooling::attention);
    CHECK(cfg.head == HeadActivation::relu);
}

TEST_CASE("full-size baseline config mirrors the word-level setup") {
    ModelConfig cfg = ModelConfig::baseline_paper();
    cfg.validate();
    CHECK(cfg.word_vec_dim() == 300);
    CHECK(cfg.state_dim() == 600);
    CHECK(cfg.layer_count() == 5);
    CHECK(cfg.pooling == Pooling::average);
    CHECK(cfg.head == HeadActivation::tanh);
}

TEST_CASE("config validation rejects out-of-range values") {
    ModelConfig cfg = ModelConfig::cian_toy();
    cfg.hidden_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig::cian_toy();
    cfg.dropout_rate = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig::cian_toy();
    cfg.filter_counts.pop_back();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig::cian_toy();
    cfg.l_max = 2;  // narrower than the widest filter
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = ModelConfig::baseline_toy();
    cfg.word_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("config JSON round trip preserves every field") {
    ModelConfig cfg = ModelConfig::cian_toy();
    cfg.dropout_rate = 0.1;
    cfg.head = HeadActivation::tanh;
    cfg.enriched_pair_features = true;
    cfg.seed = 99;

    ModelConfig back = ModelConfig::from_json(cfg.to_json());
    CHECK(back.variant == cfg.variant);
    CHECK(back.char_dim == cfg.char_dim);
    CHECK(back.l_max == cfg.l_max);
    CHECK(back.filter_widths == cfg.filter_widths);
    CHECK(back.filter_counts == cfg.filter_counts);
    CHECK(back.highway_layers == cfg.highway_layers);
    CHECK(back.hidden_dim == cfg.hidden_dim);
    CHECK(back.classifier_hidden == cfg.classifier_hidden);
    CHECK(back.dropout_rate == cfg.dropout_rate);
    CHECK(back.pooling == cfg.pooling);
    CHECK(back.head == cfg.head);
    CHECK(back.enriched_pair_features == cfg.enriched_pair_features);
    CHECK(back.seed == cfg.seed);
}

TEST_CASE("sparse config JSON falls back to the variant preset") {
    ModelConfig cfg = ModelConfig::from_json(nlohmann::json{{"variant", "baseline"}});
    CHECK(cfg.word_dim == 300);
    CHECK(cfg.pooling == Pooling::average);

    ModelConfig deflt = ModelConfig::from_json(nlohmann::json::object());
    CHECK(deflt.variant == Variant::cian);
    CHECK(deflt.word_vec_dim() == 1100);

    // widths without counts regenerate the default schedule
    ModelConfig sched = ModelConfig::from_json(
        nlohmann::json{{"filter_widths", std::vector<std::size_t>{1, 2, 5}}});
    CHECK(sched.filter_counts == std::vector<std::size_t>{50, 100, 200});

    CHECK_THROWS_AS(ModelConfig::from_json(nlohmann::json{{"variant", "gru"}}), ConfigError);
    CHECK_THROWS_AS(ModelConfig::from_json(nlohmann::json{{"pooling", "max"}}), ConfigError);
}

TEST_CASE("enriched pair features double the classifier input") {
    ModelConfig cfg = ModelConfig::cian_toy();
    cfg.enriched_pair_features = true;
    CHECK(cfg.classifier_input_dim() == 4 * cfg.state_dim());
}

// ---------------------------------------------------------------------------
// Construction and parameters
// ---------------------------------------------------------------------------

TEST_CASE("parameter listing covers both variants with stable names") {
    Model cian(ModelConfig::cian_toy());
    NamedParams cp = cian.params();
    CHECK(cp.front().name == "charemb.table");
    CHECK(find_param(cp, "charcnn.w1.filter0.H").shape() == Shape{8, 1});
    CHECK(find_param(cp, "highway.0.W_H").shape() == Shape{48, 48});
    CHECK(find_param(cp, "bilstm.fwd.W_i").shape() == Shape{32, 48 + 32});
    CHECK(find_param(cp, "attention.u_omega").shape() == Shape{64});
    CHECK(find_param(cp, "classifier.W1").shape() == Shape{32, 128});
    CHECK(find_param(cp, "classifier.W2").shape() == Shape{3, 32});
    CHECK(cp.back().name == "classifier.b2");

    Model base(ModelConfig::baseline_toy(), {"cat", "sat"});
    NamedParams bp = base.params();
    CHECK(bp.front().name == "wordemb.table");
    CHECK(bp.front().tensor.shape() == Shape{3, 24});  // <unk> + 2 words
    for (const auto& p : bp) CHECK(p.name.find("attention") == std::string::npos);
}

TEST_CASE("same seed builds bit-identical models") {
    ModelConfig cfg = ModelConfig::cian_toy();
    cfg.seed = 5;
    Model a(cfg), b(cfg);
    CHECK(params_bit_equal(a.params(), b.params()));

    Prediction pa = a.predict("a man sleeps", "a man rests");
    Prediction pb = b.predict("a man sleeps", "a man rests");
    CHECK(pa.probabilities == pb.probabilities);
}

TEST_CASE("prediction is repeatable on one model") {
    Model m(ModelConfig::cian_toy());
    Prediction p1 = m.predict("the cat sat", "the cat sat down");
    Prediction p2 = m.predict("the cat sat", "the cat sat down");
    CHECK(p1.probabilities == p2.probabilities);
    CHECK(p1.label == p2.label);
}

TEST_CASE("premise and hypothesis run through the same parameters") {
    Model m(ModelConfig::cian_toy());
    TokenizedSentence s = m.tokenize("a bird sings loudly");
    Tape tape;
    auto [p, h] = m.encode_pair(tape, s, s, Mode::eval);
    CHECK(p.pooled.data() == h.pooled.data());
    CHECK(p.attention_weights.data() == h.attention_weights.data());
}

TEST_CASE("baseline maps every unknown word to the shared row") {
    Model m(ModelConfig::baseline_toy(), {"sat"});
    Prediction a = m.predict("dog sat", "sat");
    Prediction b = m.predict("pig sat", "sat");  // same unknown-word pattern
    CHECK(a.probabilities == b.probabilities);
}

// ---------------------------------------------------------------------------
// Classifier head
// ---------------------------------------------------------------------------

TEST_CASE("zeroed head yields the exact uniform distribution") {
    Model m(ModelConfig::cian_toy());
    NamedParams params = m.params();
    zero_param(params, "classifier.W1");
    zero_param(params, "classifier.b1");
    zero_param(params, "classifier.W2");
    zero_param(params, "classifier.b2");

    Prediction pred = m.predict("a man walks", "a woman sits");
    for (double p : pred.probabilities) CHECK(p == 1.0 / 3.0);
    CHECK(pred.label == 0);
}

TEST_CASE("probabilities form a distribution") {
    Model m(ModelConfig::cian_toy());
    Prediction pred = m.predict("the dog barks", "the dog is quiet");
    double total = 0.0;
    for (double p : pred.probabilities) {
        CHECK(p > 0.0);
        total += p;
    }
    CHECK(std::fabs(total - 1.0) < 1e-12);
    CHECK(pred.label ==
          std::size_t(std::max_element(pred.probabilities.begin(), pred.probabilities.end()) -
                      pred.probabilities.begin()));
}

TEST_CASE("classifier rejects sentence vectors of the wrong size") {
    Model m(ModelConfig::cian_toy());
    Tape tape;
    CHECK_THROWS_AS(m.classify_logits(tape, Tensor({3}), Tensor({64})), DimensionError);
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

TEST_CASE("untrained loss on a balanced batch is close to ln 3") {
    Model m(ModelConfig::cian_toy());
    std::vector<PairSample> batch{
        make_sample(m, "a man sleeps", "a man rests", 0, "t0"),
        make_sample(m, "a dog runs", "a dog might be racing", 1, "t1"),
        make_sample(m, "the girl sings", "the girl is silent", 2, "t2"),
    };
    const double loss = m.loss_and_grad(batch);
    CHECK(std::fabs(loss - std::log(3.0)) < 0.1);
}

TEST_CASE("single-sample loss equals the negative log probability") {
    Model m(ModelConfig::cian_toy());
    PairSample ex = make_sample(m, "a boy eats", "a boy has food", 0, "s0");
    const double loss = m.loss_and_grad({ex}, Mode::eval);
    Prediction pred = m.predict(ex.premise, ex.hypothesis);
    CHECK(loss == doctest::Approx(-std::log(pred.probabilities[0])).epsilon(1e-12));
}

TEST_CASE("out-of-range labels are rejected by sample id") {
    Model m(ModelConfig::cian_toy());
    PairSample ex = make_sample(m, "a man walks", "a man moves", 7, "bad-7");
    CHECK_THROWS_WITH_AS(m.loss_and_grad({ex}), "sample 'bad-7': label 7 out of range",
                         DataError);
    CHECK_THROWS_AS(m.loss_and_grad({}), DataError);
}

TEST_CASE("one optimizer step lowers the training loss") {
    for (ModelConfig cfg : {ModelConfig::cian_toy(), ModelConfig::baseline_toy()}) {
        cfg.seed = 11;
        Model m(cfg, {"a", "man", "sleeps", "rests", "runs"});
        std::vector<PairSample> batch{
            make_sample(m, "a man sleeps", "a man rests", 0, "b0"),
            make_sample(m, "a man sleeps", "a man runs", 2, "b1"),
        };
        Adam adam(m.params(), {.learning_rate = 1e-4});
        const double before = m.loss_and_grad(batch);
        adam.step();
        const double after = m.loss_and_grad(batch);
        CHECK(after < before);
    }
}

// ---------------------------------------------------------------------------
// Attention reporting
// ---------------------------------------------------------------------------

TEST_CASE("predictions carry one weight per word under attention pooling") {
    Model m(ModelConfig::cian_toy());
    Prediction pred = m.predict("a tall man sleeps", "a man naps");
    REQUIRE(pred.premise_attention.size() == 4);
    REQUIRE(pred.hypothesis_attention.size() == 3);
    CHECK(pred.premise_attention[1].first == "tall");
    double total = 0.0;
    for (const auto& [word, w] : pred.premise_attention) total += w;
    CHECK(std::fabs(total - 1.0) < 1e-12);
}

TEST_CASE("average pooling reports no attention weights") {
    Model m(ModelConfig::baseline_toy(), {"a", "man"});
    Prediction pred = m.predict("a man", "a man");
    CHECK(pred.premise_attention.empty());
    CHECK(pred.hypothesis_attention.empty());
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

TEST_CASE("vocabulary collection is first-seen order with <unk> in front") {
    Model probe(ModelConfig::baseline_toy(), {});
    std::vector<PairSample> data{
        make_sample(probe, "the cat sat", "the cat sat", 0, "v0"),
        make_sample(probe, "a cat ran", "the dog sat", 1, "v1"),
    };
    std::vector<std::string> vocab = Model::collect_vocab(data);
    CHECK(vocab == std::vector<std::string>{"<unk>", "the", "cat", "sat", "a", "ran", "dog"});
}

TEST_CASE("word vectors overwrite known rows and append new ones") {
    ModelConfig cfg = ModelConfig::baseline_toy();
    cfg.word_dim = 3;
    Model m(cfg, {"cat"});
    REQUIRE(m.vocab() == std::vector<std::string>{"<unk>", "cat"});

    fs::path path = scratch_dir() / "vectors.txt";
    write_file(path, "cat 1 2 3\nfresh -1 -2 -3\n");
    m.load_word_vectors(path.string());

    CHECK(m.vocab() == std::vector<std::string>{"<unk>", "cat", "fresh"});
    Tensor table = find_param(m.params(), "wordemb.table");
    REQUIRE(table.shape() == Shape{3, 3});
    CHECK(table.at(1, 0) == 1.0);
    CHECK(table.at(1, 2) == 3.0);
    CHECK(table.at(2, 1) == -2.0);
}

TEST_CASE("word-vector rows of the wrong width name the file line") {
    ModelConfig cfg = ModelConfig::baseline_toy();
    cfg.word_dim = 3;
    Model m(cfg, {"cat"});

    fs::path path = scratch_dir() / "vectors_bad.txt";
    write_file(path, "cat 1 2\n");
    try {
        m.load_word_vectors(path.string());
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find(path.string() + ":1") != std::string::npos);
        CHECK(msg.find("expected 3") != std::string::npos);
    }

    Model cian(ModelConfig::cian_toy());
    CHECK_THROWS_AS(cian.load_word_vectors(path.string()), ConfigError);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

TEST_CASE("checkpoint round trip restores parameters and predictions") {
    fs::path path = scratch_dir() / "roundtrip.ckpt";
    ModelConfig cfg = ModelConfig::cian_toy();
    cfg.seed = 17;
    Model m(cfg);
    Prediction before = m.predict("a man sleeps", "a man rests");

    save_checkpoint(m, path.string());
    Model back = load_checkpoint(path.string());

    CHECK(back.config().variant == Variant::cian);
    CHECK(params_bit_equal(m.params(), back.params()));
    Prediction after = back.predict("a man sleeps", "a man rests");
    CHECK(before.probabilities == after.probabilities);
}

TEST_CASE("baseline checkpoints carry their vocabulary sidecar") {
    fs::path path = scratch_dir() / "baseline.ckpt";
    Model m(ModelConfig::baseline_toy(), {"cat", "sat", "mat"});
    Prediction before = m.predict("cat sat", "cat sat on mat");

    save_checkpoint(m, path.string());
    CHECK(fs::exists(path.string() + ".vocab"));

    Model back = load_checkpoint(path.string());
    CHECK(back.vocab() == m.vocab());
    CHECK(params_bit_equal(m.params(), back.params()));
    Prediction after = back.predict("cat sat", "cat sat on mat");
    CHECK(before.probabilities == after.probabilities);
}

TEST_CASE("checkpoints with doctored contents are rejected by name") {
    fs::path path = scratch_dir() / "doctored.ckpt";
    Model m(ModelConfig::cian_toy());
    save_checkpoint(m, path.string());

    nlohmann::json j;
    {
        std::ifstream in(path);
        in >> j;
    }

    SUBCASE("wrong shape") {
        j["params"]["classifier.b2"]["shape"] = {4};
        j["params"]["classifier.b2"]["data"] = {0.0, 0.0, 0.0, 0.0};
        fs::path bad = scratch_dir() / "bad_shape.ckpt";
        write_file(bad, j.dump());
        try {
            load_checkpoint(bad.string());
            FAIL("expected DimensionError");
        } catch (const DimensionError& e) {
            CHECK(std::string(e.what()).find("classifier.b2") != std::string::npos);
        }
    }

    SUBCASE("missing parameter") {
        j["params"].erase("classifier.b2");
        fs::path bad = scratch_dir() / "bad_missing.ckpt";
        write_file(bad, j.dump());
        CHECK_THROWS_AS(load_checkpoint(bad.string()), DataError);
    }

    SUBCASE("unknown extra parameter") {
        j["params"]["mystery.table"] = {{"shape", {1}}, {"data", {0.0}}};
        fs::path bad = scratch_dir() / "bad_extra.ckpt";
        write_file(bad, j.dump());
        CHECK_THROWS_AS(load_checkpoint(bad.string()), DataError);
    }

    SUBCASE("wrong format tag") {
        j["format"] = "other-format";
        fs::path bad = scratch_dir() / "bad_format.ckpt";
        write_file(bad, j.dump());
        CHECK_THROWS_AS(load_checkpoint(bad.string()), DataError);
    }

    CHECK_THROWS_AS(load_checkpoint((scratch_dir() / "nope.ckpt").string()), IoError);
}
