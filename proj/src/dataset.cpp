#include "cian/dataset.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "cian/error.hpp"

namespace cian {

DataFormat format_from_path(const std::string& path) {
    const auto dotpos = path.rfind('.');
    const std::string ext = dotpos == std::string::npos ? "" : path.substr(dotpos);
    return ext == ".tsv" ? DataFormat::tsv : DataFormat::jsonl;
}

std::optional<std::size_t> parse_label(const std::string& name) {
    if (name == "entailment") return 0;
    if (name == "neutral") return 1;
    if (name == "contradiction") return 2;
    if (name == "-") return std::nullopt;
    throw DataError("unknown label '" + name + "'");
}

namespace {

std::vector<std::string> read_tags(const nlohmann::json& rec) {
    std::vector<std::string> tags;
    for (const char* field : {"annotations", "tags"}) {
        if (!rec.contains(field)) continue;
        const auto& v = rec.at(field);
        if (v.is_string()) {
            tags.push_back(v.get<std::string>());
        } else if (v.is_array()) {
            for (const auto& t : v) tags.push_back(t.get<std::string>());
        }
    }
    return tags;
}

Example parse_jsonl_line(const std::string& line, std::size_t line_no, bool& unlabeled) {
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    Example ex;
    try {
        ex.premise = rec.at("sentence1").get<std::string>();
        ex.hypothesis = rec.at("sentence2").get<std::string>();
        const auto label = parse_label(rec.at("gold_label").get<std::string>());
        if (!label) {
            unlabeled = true;
            return ex;
        }
        ex.label = *label;
        ex.id = rec.value("pairID", "line" + std::to_string(line_no));
        ex.tags = read_tags(rec);
    } catch (const DataError& e) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    return ex;
}

Example parse_tsv_line(const std::string& line, std::size_t line_no, bool& unlabeled) {
    std::vector<std::string> cols;
    std::string col;
    std::istringstream ss(line);
    while (std::getline(ss, col, '\t')) cols.push_back(col);
    if (cols.size() != 3)
        throw DataError("line " + std::to_string(line_no) + ": expected 3 tab-separated columns, got " +
                        std::to_string(cols.size()));
    Example ex;
    ex.premise = cols[0];
    ex.hypothesis = cols[1];
    std::optional<std::size_t> label;
    try {
        label = parse_label(cols[2]);
    } catch (const DataError&) {
        throw DataError("line " + std::to_string(line_no) + ": unknown label '" + cols[2] + "'");
    }
    if (!label) {
        unlabeled = true;
        return ex;
    }
    ex.label = *label;
    ex.id = "line" + std::to_string(line_no);
    return ex;
}

bool blank(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

std::vector<Example> load_dataset(const std::string& path, DataFormat format, LoadStats* stats) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset: " + path);

    std::vector<Example> out;
    LoadStats local;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        bool unlabeled = false;
        Example ex = format == DataFormat::jsonl ? parse_jsonl_line(line, line_no, unlabeled)
                                                 : parse_tsv_line(line, line_no, unlabeled);
        if (unlabeled) {
            ++local.dropped_unlabeled;
            continue;
        }
        ++local.kept;
        out.push_back(std::move(ex));
    }
    if (out.empty() && local.dropped_unlabeled == 0)
        std::cerr << "warning: dataset " << path << " is empty\n";
    if (stats) *stats = local;
    return out;
}

std::vector<Example> build_epoch(const std::vector<Example>& primary,
                                 const std::vector<Example>& aux, double fraction, Rng& rng) {
    if (primary.empty()) throw DataError("build_epoch: primary dataset is empty");
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("build_epoch: fraction must lie in [0, 1]");

    std::vector<Example> epoch = primary;
    const std::size_t take = static_cast<std::size_t>(fraction * double(aux.size()));
    if (take > 0) {
        epoch.reserve(primary.size() + take);
        for (std::size_t i : rng.sample_without_replacement(aux.size(), take))
            epoch.push_back(aux[i]);
    }
    rng.shuffle(epoch);
    return epoch;
}

}  // namespace cian
