#pragma once

// Dataset records, JSONL/TSV loaders, and the per-epoch mixing scheme: every
// epoch trains on the full primary set plus a fresh random slice of an
// auxiliary set.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cian/rng.hpp"

namespace cian {

struct Example {
    std::string premise;
    std::string hypothesis;
    std::size_t label = 0;  // entailment=0, neutral=1, contradiction=2
    std::string id;
    std::vector<std::string> tags;
};

struct LoadStats {
    std::size_t kept = 0;
    std::size_t dropped_unlabeled = 0;  // gold_label "-"
};

enum class DataFormat { jsonl, tsv };

// .jsonl/.json -> jsonl, .tsv -> tsv; anything else -> jsonl
DataFormat format_from_path(const std::string& path);

// nullopt for the unresolvable label "-"; throws DataError otherwise when the
// string is not one of the three classes.
std::optional<std::size_t> parse_label(const std::string& name);

// JSONL fields: sentence1, sentence2, gold_label, optional pairID and
// annotations/tags. TSV: premise <tab> hypothesis <tab> label. Records labeled
// "-" are dropped and counted; malformed lines raise DataError naming the
// line; an empty file is a warning, not an error.
std::vector<Example> load_dataset(const std::string& path, DataFormat format,
                                  LoadStats* stats = nullptr);

struct MixSpec {
    std::string primary_path;
    std::string aux_path;        // empty: no mixing
    double aux_fraction = 0.20;  // of |aux|, per epoch
};

// Full primary set + floor(fraction * |aux|) auxiliary examples sampled
// without replacement, shuffled. Successive calls on one rng stream draw
// fresh subsamples, so each epoch mixes in different auxiliary examples.
std::vector<Example> build_epoch(const std::vector<Example>& primary,
                                 const std::vector<Example>& aux, double fraction, Rng& rng);

}  // namespace cian
