#include "cian/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cian/checkpoint.hpp"
#include "cian/error.hpp"

namespace cian {

std::string metrics_line(const EpochMetrics& m) {
    nlohmann::json j;
    j["epoch"] = m.epoch;
    j["train_loss"] = m.train_loss;
    j["dev_accuracy"] = m.dev_accuracy;
    j["wall_time_s"] = m.wall_time_s;
    return j.dump();
}

namespace {

PairSample to_sample(const Model& model, const Example& ex) {
    PairSample s;
    s.premise = model.tokenize(ex.premise);
    s.hypothesis = model.tokenize(ex.hypothesis);
    s.label = ex.label;
    s.id = ex.id;
    return s;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<Example>& primary,
                        const std::vector<Example>& aux, double aux_fraction,
                        const std::vector<Example>& dev, const TrainConfig& cfg) {
    if (primary.empty()) throw DataError("train: primary dataset is empty");
    if (cfg.batch_size == 0) throw ConfigError("train: batch size must be positive");

    Rng data_rng(cfg.seed);
    Adam optimizer(model.params(), AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});

    std::ofstream metrics;
    if (!cfg.metrics_path.empty()) {
        metrics.open(cfg.metrics_path, std::ios::binary);
        if (!metrics) throw IoError("cannot write metrics log: " + cfg.metrics_path);
    }

    TrainResult result;
    result.best_dev_accuracy = -1.0;
    std::size_t epochs_without_improvement = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Example> mix = build_epoch(primary, aux, aux.empty() ? 0.0 : aux_fraction,
                                               data_rng);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < mix.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, mix.size());
            std::vector<PairSample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(to_sample(model, mix[i]));

            const double loss = model.loss_and_grad(batch, Mode::train);
            if (!std::isfinite(loss))
                throw InvariantError("train: non-finite loss in epoch " + std::to_string(epoch) +
                                     ", batch starting at sample '" + batch.front().id + "'");
            optimizer.step();
            loss_sum += loss * double(end - start);
            seen += end - start;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / double(seen);
        m.dev_accuracy = dev.empty() ? 0.0 : evaluate_model(model, dev).accuracy;
        m.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.push_back(m);
        if (metrics.is_open()) metrics << metrics_line(m) << '\n';

        if (m.dev_accuracy > result.best_dev_accuracy) {
            result.best_dev_accuracy = m.dev_accuracy;
            result.best_epoch = epoch;
            epochs_without_improvement = 0;
            if (!cfg.checkpoint_path.empty()) save_checkpoint(model, cfg.checkpoint_path);
        } else {
            ++epochs_without_improvement;
            if (cfg.patience && epochs_without_improvement >= *cfg.patience) break;
        }
    }
    return result;
}

TagReport evaluate_model(Model& model, const std::vector<Example>& data,
                         const std::string& split_name) {
    if (data.empty()) throw DataError("evaluate: dataset is empty");
    TagReport report;
    report.split = split_name;
    for (const Example& ex : data) {
        const Prediction pred = model.predict(model.tokenize(ex.premise),
                                              model.tokenize(ex.hypothesis));
        const bool hit = pred.label == ex.label;
        ++report.total;
        if (hit) ++report.correct;
        for (const std::string& tag : ex.tags) {
            TagCount& c = report.per_tag[tag];
            ++c.total;
            if (hit) ++c.correct;
        }
    }
    report.accuracy = double(report.correct) / double(report.total);
    return report;
}

std::string tag_report_tsv(const TagReport& report) {
    std::ostringstream out;
    auto pct = [](std::size_t correct, std::size_t total) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(2);
        s << (total == 0 ? 0.0 : 100.0 * double(correct) / double(total));
        return s.str();
    };
    out << "tag\tsplit\tcorrect\ttotal\taccuracy\n";
    out << "ALL\t" << report.split << '\t' << report.correct << '\t' << report.total << '\t'
        << pct(report.correct, report.total) << '\n';
    for (const auto& [tag, c] : report.per_tag)
        out << tag << '\t' << report.split << '\t' << c.correct << '\t' << c.total << '\t'
            << pct(c.correct, c.total) << '\n';
    return out.str();
}

}  // namespace cian
