#pragma once

// Attention-weight export: JSON records plus a standalone SVG per pair, one
// shaded cell per word (premise on the left, hypothesis on the right), darker
// cell = larger weight.

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cian/dataset.hpp"
#include "cian/model.hpp"

namespace cian {

struct AttentionRecord {
    std::string id;
    std::size_t label = 0;  // predicted
    std::array<double, 3> probabilities{};
    std::vector<std::pair<std::string, double>> premise;     // (word, weight)
    std::vector<std::pair<std::string, double>> hypothesis;  // (word, weight)
};

// Runs the model in eval mode; requires attention pooling
// (UnsupportedVariantError otherwise).
AttentionRecord attention_record(Model& model, const std::string& premise,
                                 const std::string& hypothesis, const std::string& id);

nlohmann::json attention_json(const std::vector<AttentionRecord>& records);

// Grey level of a cell: 255 - round(175 * alpha / alpha_max), so the largest
// weight in a sentence maps to 80 and a zero weight to plain 255. The SVG is
// an exact function of the JSON weights through this formula.
int shade_value(double alpha, double alpha_max);

std::string attention_svg(const AttentionRecord& record);

// Writes <prefix>.json plus <prefix>_<id>.svg per pair; returns the paths
// written, JSON first.
std::vector<std::string> dump_attention(Model& model, const std::vector<Example>& pairs,
                                        const std::string& prefix);

}  // namespace cian
