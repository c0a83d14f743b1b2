#include "cian/cli.hpp"

#include <cstdlib>
#include <utility>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cian/attention_dump.hpp"
#include "cian/checkpoint.hpp"
#include "cian/dataset.hpp"
#include "cian/error.hpp"
#include "cian/train.hpp"

namespace cian {

namespace {

// Flag values shared by the model-building subcommands; only explicitly
// passed flags override the preset/--config values.
struct ModelFlags {
    std::string variant = "cian";
    bool toy = false;
    std::string config_path;
    std::size_t char_dim = 0, l_max = 0, word_dim = 0;
    std::size_t hidden_dim = 0, classifier_hidden = 0, highway_layers = 0;
    double dropout = -1.0;
    std::string pooling, head;
};

void add_model_flags(CLI::App* cmd, ModelFlags& f) {
    cmd->add_option("--variant", f.variant, "Model variant: cian or baseline")
        ->check(CLI::IsMember({"cian", "baseline"}));
    cmd->add_flag("--toy", f.toy, "Use the small preset that overfits the tiny corpus quickly");
    cmd->add_option("--config", f.config_path, "JSON model-config file (flags still override)");
    cmd->add_option("--char-dim", f.char_dim, "Character embedding dimension");
    cmd->add_option("--l-max", f.l_max, "Padded word length in characters");
    cmd->add_option("--word-dim", f.word_dim, "Word embedding dimension (baseline)");
    cmd->add_option("--hidden-dim", f.hidden_dim, "LSTM hidden dimension per direction");
    cmd->add_option("--classifier-hidden", f.classifier_hidden, "Classifier hidden width");
    cmd->add_option("--highway-layers", f.highway_layers, "Number of highway layers");
    cmd->add_option("--dropout", f.dropout, "Dropout rate on BiLSTM inputs");
    cmd->add_option("--pooling", f.pooling, "Pooling: attention or average")
        ->check(CLI::IsMember({"attention", "average"}));
    cmd->add_option("--head", f.head, "Classifier activation: relu or tanh")
        ->check(CLI::IsMember({"relu", "tanh"}));
}

// flag > config file > CIAN_SEED env > default.
std::uint64_t resolve_seed(const CLI::App* cmd, std::uint64_t seed_flag,
                           const std::optional<std::uint64_t>& config_seed) {
    if (cmd->count("--seed")) return seed_flag;
    if (config_seed) return *config_seed;
    if (const char* env = std::getenv("CIAN_SEED")) return std::strtoull(env, nullptr, 10);
    return 1;
}

ModelConfig resolve_config(const CLI::App* cmd, const ModelFlags& f, std::uint64_t seed_flag) {
    std::optional<std::uint64_t> config_seed;
    ModelConfig cfg;
    nlohmann::json j;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw IoError("cannot open config file: " + f.config_path);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file " + f.config_path + ": " + e.what());
        }
        if (cmd->count("--variant")) j["variant"] = f.variant;
        cfg = ModelConfig::from_json(j);
        if (j.contains("seed")) config_seed = cfg.seed;
    } else if (f.variant == "baseline") {
        cfg = f.toy ? ModelConfig::baseline_toy() : ModelConfig::baseline_paper();
    } else {
        cfg = f.toy ? ModelConfig::cian_toy() : ModelConfig::cian_paper();
    }

    if (cmd->count("--char-dim")) cfg.char_dim = f.char_dim;
    if (cmd->count("--l-max")) cfg.l_max = f.l_max;
    if (cmd->count("--word-dim")) cfg.word_dim = f.word_dim;
    if (cmd->count("--hidden-dim")) cfg.hidden_dim = f.hidden_dim;
    if (cmd->count("--classifier-hidden")) cfg.classifier_hidden = f.classifier_hidden;
    if (cmd->count("--highway-layers")) cfg.highway_layers = f.highway_layers;
    if (cmd->count("--dropout")) cfg.dropout_rate = f.dropout;
    if (!f.pooling.empty()) cfg.pooling = f.pooling == "attention" ? Pooling::attention
                                                                   : Pooling::average;
    if (!f.head.empty()) cfg.head = f.head == "relu" ? HeadActivation::relu : HeadActivation::tanh;
    cfg.seed = resolve_seed(cmd, seed_flag, config_seed);
    cfg.validate();
    return cfg;
}

std::vector<Example> load_by_extension(const std::string& path, const std::string& format,
                                       LoadStats* stats = nullptr) {
    DataFormat fmt = format.empty() ? format_from_path(path)
                                    : (format == "tsv" ? DataFormat::tsv : DataFormat::jsonl);
    return load_dataset(path, fmt, stats);
}

int cmd_train(const CLI::App* cmd, const ModelFlags& flags, const std::string& train_path,
              const std::string& aux_path, double aux_fraction, const std::string& dev_path,
              const std::string& format, const TrainConfig& tcfg_in, std::uint64_t seed_flag,
              const std::string& word_vectors) {
    ModelConfig mcfg = resolve_config(cmd, flags, seed_flag);
    TrainConfig tcfg = tcfg_in;
    tcfg.seed = mcfg.seed;

    LoadStats stats;
    const std::vector<Example> primary = load_by_extension(train_path, format, &stats);
    if (stats.dropped_unlabeled > 0)
        std::cerr << "note: dropped " << stats.dropped_unlabeled << " unlabeled record(s) from "
                  << train_path << '\n';
    std::vector<Example> aux;
    if (!aux_path.empty()) aux = load_by_extension(aux_path, format);
    const std::vector<Example> dev =
        dev_path.empty() || dev_path == train_path ? primary
                                                   : load_by_extension(dev_path, format);

    Model model = [&] {
        if (mcfg.variant != Variant::baseline) return Model(mcfg);
        CharAlphabet alphabet;
        std::vector<PairSample> samples;
        for (const std::vector<Example>* ds : {&primary, &std::as_const(aux)})
            for (const Example& ex : *ds) {
                PairSample s;
                s.premise = tokenize_and_vectorize(ex.premise, alphabet);
                s.hypothesis = tokenize_and_vectorize(ex.hypothesis, alphabet);
                samples.push_back(std::move(s));
            }
        return Model(mcfg, Model::collect_vocab(samples));
    }();
    if (!word_vectors.empty()) model.load_word_vectors(word_vectors);

    TrainResult result = train_model(model, primary, aux, aux_fraction, dev, tcfg);
    for (const EpochMetrics& m : result.history) std::cout << metrics_line(m) << '\n';
    std::cout << "best dev accuracy " << result.best_dev_accuracy << " at epoch "
              << result.best_epoch;
    if (!tcfg.checkpoint_path.empty()) std::cout << "; checkpoint: " << tcfg.checkpoint_path;
    std::cout << '\n';
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& format, const std::string& split, const std::string& report_path) {
    Model model = load_checkpoint(checkpoint);
    const std::vector<Example> data = load_by_extension(data_path, format);
    const TagReport report = evaluate_model(model, data, split);
    const std::string tsv = tag_report_tsv(report);
    if (report_path.empty()) {
        std::cout << tsv;
    } else {
        std::ofstream out(report_path, std::ios::binary);
        if (!out) throw IoError("cannot write report: " + report_path);
        out << tsv;
        std::cout << "accuracy " << report.accuracy << " (" << report.correct << '/'
                  << report.total << "); report: " << report_path << '\n';
    }
    return 0;
}

int cmd_predict(const std::string& checkpoint, std::string premise, std::string hypothesis) {
    if (premise.empty() != hypothesis.empty())
        throw ConfigError("predict: pass both --premise and --hypothesis, or neither (stdin)");
    if (premise.empty()) {
        if (!std::getline(std::cin, premise) || !std::getline(std::cin, hypothesis))
            throw DataError("predict: expected premise and hypothesis lines on stdin");
    }
    Model model = load_checkpoint(checkpoint);
    const Prediction pred = model.predict(premise, hypothesis);
    nlohmann::json j;
    j["label"] = kLabelNames[pred.label];
    j["probabilities"] = pred.probabilities;
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_dump_attention(const std::string& checkpoint, const std::string& data_path,
                       const std::string& format, const std::string& premise,
                       const std::string& hypothesis, const std::string& prefix,
                       std::size_t limit) {
    Model model = load_checkpoint(checkpoint);
    std::vector<Example> pairs;
    if (!data_path.empty()) {
        pairs = load_by_extension(data_path, format);
        if (limit > 0 && pairs.size() > limit) pairs.resize(limit);
    } else if (!premise.empty() && !hypothesis.empty()) {
        Example ex;
        ex.premise = premise;
        ex.hypothesis = hypothesis;
        ex.id = "pair0";
        pairs.push_back(std::move(ex));
    } else {
        throw ConfigError("dump-attention: pass --data or both --premise and --hypothesis");
    }
    for (const std::string& path : dump_attention(model, pairs, prefix))
        std::cout << path << '\n';
    return 0;
}

int cmd_inspect(const std::string& checkpoint) {
    Model model = load_checkpoint(checkpoint);
    std::cout << "format: " << kCheckpointFormat << '\n';
    std::cout << "config: " << model.config().to_json().dump() << '\n';
    std::size_t total = 0;
    for (const auto& p : model.params()) {
        std::cout << p.name << "  " << shape_str(p.tensor.shape()) << "  " << p.tensor.size()
                  << '\n';
        total += p.tensor.size();
    }
    std::cout << "total parameters: " << total << '\n';
    if (model.config().variant == Variant::baseline)
        std::cout << "vocabulary: " << model.vocab().size() << " words (sidecar "
                  << checkpoint + ".vocab" << ")\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Character-level intra-attention NLI: train, evaluate, and inspect"};
    app.require_subcommand(1);

    // train ------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a model");
    ModelFlags flags;
    std::string train_path, aux_path, dev_path, format, word_vectors;
    double aux_fraction = 0.20;
    TrainConfig tcfg;
    std::uint64_t seed_flag = 1;
    std::size_t patience_flag = 0;
    train->add_option("--train", train_path, "Training dataset (jsonl or tsv)")->required();
    train->add_option("--aux", aux_path, "Auxiliary dataset mixed in each epoch");
    train->add_option("--aux-fraction", aux_fraction, "Fraction of the auxiliary set per epoch");
    train->add_option("--dev", dev_path, "Dev dataset (defaults to the training set)");
    train->add_option("--format", format, "Force dataset format")
        ->check(CLI::IsMember({"jsonl", "tsv"}));
    add_model_flags(train, flags);
    train->add_option("--epochs", tcfg.epochs, "Epoch cap");
    train->add_option("--batch-size", tcfg.batch_size, "Minibatch size");
    train->add_option("--lr", tcfg.learning_rate, "Adam learning rate");
    auto* patience_opt =
        train->add_option("--patience", patience_flag, "Early-stop patience on dev accuracy");
    train->add_option("--checkpoint", tcfg.checkpoint_path, "Checkpoint output path");
    train->add_option("--metrics", tcfg.metrics_path, "Metrics log output path (JSONL)");
    train->add_option("--seed", seed_flag, "Seed (fallback: config file, then $CIAN_SEED)");
    train->add_option("--word-vectors", word_vectors,
                      "Plain-text word vectors to initialize the baseline table");

    // eval -------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with a per-tag report");
    std::string ckpt, data_path, split = "dev", report_path;
    eval->add_option("--checkpoint", ckpt, "Checkpoint path")->required();
    eval->add_option("--data", data_path, "Evaluation dataset")->required();
    eval->add_option("--format", format, "Force dataset format")
        ->check(CLI::IsMember({"jsonl", "tsv"}));
    eval->add_option("--split", split, "Split name recorded in the report");
    eval->add_option("--report", report_path, "TSV report path (default: stdout)");

    // predict ----------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Classify one premise/hypothesis pair");
    std::string premise, hypothesis;
    predict->add_option("--checkpoint", ckpt, "Checkpoint path")->required();
    predict->add_option("--premise", premise, "Premise (omit both to read stdin)");
    predict->add_option("--hypothesis", hypothesis, "Hypothesis");

    // dump-attention ----------------------------------------------------
    auto* dump = app.add_subcommand("dump-attention", "Export attention weights as JSON + SVG");
    std::string prefix = "attention";
    std::size_t limit = 0;
    dump->add_option("--checkpoint", ckpt, "Checkpoint path")->required();
    dump->add_option("--data", data_path, "Pairs to visualize (jsonl or tsv)");
    dump->add_option("--premise", premise, "Single premise");
    dump->add_option("--hypothesis", hypothesis, "Single hypothesis");
    dump->add_option("--out", prefix, "Output prefix: <prefix>.json, <prefix>_<id>.svg");
    dump->add_option("--limit", limit, "Visualize only the first N pairs");

    // inspect-checkpoint -------------------------------------------------
    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print config and parameter table");
    inspect->add_option("--checkpoint", ckpt, "Checkpoint path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (train->parsed()) {
            if (*patience_opt) tcfg.patience = patience_flag;
            return cmd_train(train, flags, train_path, aux_path, aux_fraction, dev_path, format,
                             tcfg, seed_flag, word_vectors);
        }
        if (eval->parsed()) return cmd_eval(ckpt, data_path, format, split, report_path);
        if (predict->parsed()) return cmd_predict(ckpt, premise, hypothesis);
        if (dump->parsed())
            return cmd_dump_attention(ckpt, data_path, format, premise, hypothesis, prefix, limit);
        if (inspect->parsed()) return cmd_inspect(ckpt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace cian
