#pragma once

// Checkpoints: one JSON file mapping stable dotted parameter names to shapes
// and flat float64 data, with the model config embedded. Baseline models add
// a "<path>.vocab" sidecar, one word per line, line number = table row.

#include <string>

#include "cian/model.hpp"

namespace cian {

inline constexpr const char* kCheckpointFormat = "cian-checkpoint-v1";

void save_checkpoint(const Model& model, const std::string& path);

// Rebuilds the model from the embedded config (and vocab sidecar for the
// baseline), then overwrites every parameter. Mismatched shapes raise
// DimensionError naming the parameter.
Model load_checkpoint(const std::string& path);

}  // namespace cian
