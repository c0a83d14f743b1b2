#pragma once

// Training loop (Adam over epoch mixes, checkpoint-if-best, optional early
// stopping), evaluation with per-annotation-tag accuracy, and the metrics log.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cian/dataset.hpp"
#include "cian/model.hpp"

namespace cian {

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double learning_rate = 1e-3;
    std::optional<std::size_t> patience;  // on dev accuracy; empty = epoch cap only
    std::string checkpoint_path;          // empty = do not save
    std::string metrics_path;             // empty = do not write
    std::uint64_t seed = 1;               // epoch mixing / shuffling stream
};

struct EpochMetrics {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
    double wall_time_s = 0.0;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    double best_dev_accuracy = 0.0;
    std::size_t best_epoch = 0;
};

struct TagCount {
    std::size_t correct = 0;
    std::size_t total = 0;
};

struct TagReport {
    std::string split;
    std::size_t correct = 0;
    std::size_t total = 0;
    double accuracy = 0.0;
    std::map<std::string, TagCount> per_tag;  // ordered, so reports are stable
};

// One metrics-log line, line-delimited JSON with keys epoch, train_loss,
// dev_accuracy, wall_time_s.
std::string metrics_line(const EpochMetrics& m);

// Per epoch: build_epoch -> minibatch Adam steps -> dev accuracy ->
// checkpoint-if-best. Stops at the epoch cap or when dev accuracy has not
// improved for `patience` consecutive epochs. A non-finite loss aborts with a
// diagnostic naming the batch.
TrainResult train_model(Model& model, const std::vector<Example>& primary,
                        const std::vector<Example>& aux, double aux_fraction,
                        const std::vector<Example>& dev, const TrainConfig& cfg);

TagReport evaluate_model(Model& model, const std::vector<Example>& data,
                         const std::string& split_name = "dev");

// Columns: tag, split, correct, total, accuracy (percent); first data row is
// the overall "ALL" line, then one row per tag.
std::string tag_report_tsv(const TagReport& report);

}  // namespace cian
