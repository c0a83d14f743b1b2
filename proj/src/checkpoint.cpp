#include "cian/checkpoint.hpp"

#include <fstream>

#include "cian/error.hpp"

namespace cian {

void save_checkpoint(const Model& model, const std::string& path) {
    nlohmann::json j;
    j["format"] = kCheckpointFormat;
    j["config"] = model.config().to_json();
    nlohmann::json params = nlohmann::json::object();
    for (const auto& p : model.params()) {
        nlohmann::json entry;
        entry["shape"] = p.tensor.shape();
        entry["data"] = p.tensor.data();
        params[p.name] = std::move(entry);
    }
    j["params"] = std::move(params);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("short write on checkpoint: " + path);

    if (model.config().variant == Variant::baseline) {
        const std::string vocab_path = path + ".vocab";
        std::ofstream vout(vocab_path, std::ios::binary);
        if (!vout) throw IoError("cannot write vocabulary sidecar: " + vocab_path);
        for (const auto& w : model.vocab()) vout << w << '\n';
    }
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint " + path + ": " + e.what());
    }
    if (j.value("format", std::string{}) != kCheckpointFormat)
        throw DataError("checkpoint " + path + ": unknown format");

    ModelConfig cfg = ModelConfig::from_json(j.at("config"));

    std::vector<std::string> vocab;
    if (cfg.variant == Variant::baseline) {
        const std::string vocab_path = path + ".vocab";
        std::ifstream vin(vocab_path);
        if (!vin) throw IoError("cannot open vocabulary sidecar: " + vocab_path);
        std::string word;
        while (std::getline(vin, word)) vocab.push_back(word);
    }

    Model model(cfg, std::move(vocab));
    const nlohmann::json& params = j.at("params");
    for (auto& p : model.params()) {
        auto it = params.find(p.name);
        if (it == params.end())
            throw DataError("checkpoint " + path + ": missing parameter '" + p.name + "'");
        const Shape shape = it->at("shape").get<Shape>();
        if (shape != p.tensor.shape())
            throw DimensionError("checkpoint parameter '" + p.name + "': stored " +
                                 shape_str(shape) + ", model expects " +
                                 shape_str(p.tensor.shape()));
        const auto data = it->at("data").get<std::vector<double>>();
        if (data.size() != p.tensor.size())
            throw DataError("checkpoint parameter '" + p.name + "': length mismatch");
        p.tensor.data() = data;
    }
    if (params.size() != model.params().size())
        throw DataError("checkpoint " + path + ": contains parameters the model does not have");
    return model;
}

}  // namespace cian
