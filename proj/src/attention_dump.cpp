#include "cian/attention_dump.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cian/error.hpp"

namespace cian {

AttentionRecord attention_record(Model& model, const std::string& premise,
                                 const std::string& hypothesis, const std::string& id) {
    if (model.config().pooling != Pooling::attention)
        throw UnsupportedVariantError(
            "attention dump requires an attention-pooling checkpoint (got average pooling)");
    const Prediction pred = model.predict(premise, hypothesis);
    AttentionRecord rec;
    rec.id = id;
    rec.label = pred.label;
    rec.probabilities = pred.probabilities;
    rec.premise = pred.premise_attention;
    rec.hypothesis = pred.hypothesis_attention;
    return rec;
}

nlohmann::json attention_json(const std::vector<AttentionRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : records) {
        nlohmann::json j;
        j["id"] = rec.id;
        j["label"] = kLabelNames[rec.label];
        j["probabilities"] = rec.probabilities;
        auto sentence = [](const std::vector<std::pair<std::string, double>>& words) {
            nlohmann::json s = nlohmann::json::array();
            for (const auto& [word, weight] : words) s.push_back({{"word", word}, {"weight", weight}});
            return s;
        };
        j["premise"] = sentence(rec.premise);
        j["hypothesis"] = sentence(rec.hypothesis);
        arr.push_back(std::move(j));
    }
    return arr;
}

int shade_value(double alpha, double alpha_max) {
    if (alpha_max <= 0.0) return 255;
    return 255 - static_cast<int>(std::lround(175.0 * alpha / alpha_max));
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

double max_weight(const std::vector<std::pair<std::string, double>>& words) {
    double m = 0.0;
    for (const auto& [word, weight] : words) m = std::max(m, weight);
    return m;
}

// One cell per word; returns the x cursor after the last cell.
double emit_cells(std::ostringstream& svg, const std::vector<std::pair<std::string, double>>& words,
                  double x) {
    const double alpha_max = max_weight(words);
    const double h = 30.0, y = 8.0;
    for (const auto& [word, weight] : words) {
        const double w = 18.0 + 9.0 * double(word.size());
        const int g = shade_value(weight, alpha_max);
        svg << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h
            << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\" stroke=\"#555\"/>\n";
        svg << "  <text x=\"" << x + w / 2 << "\" y=\"" << y + h / 2 + 4.5
            << "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\" fill=\""
            << (g < 150 ? "#fff" : "#000") << "\">" << xml_escape(word) << "</text>\n";
        x += w + 4.0;
    }
    return x;
}

std::string sanitize_filename(const std::string& id) {
    std::string out;
    for (char c : id)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "pair" : out;
}

}  // namespace

std::string attention_svg(const AttentionRecord& record) {
    // Two passes: first to measure the total width, then to emit.
    std::ostringstream probe;
    double end = emit_cells(probe, record.premise, 8.0);
    end = emit_cells(probe, record.hypothesis, end + 28.0);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << end + 8.0
        << "\" height=\"46\" viewBox=\"0 0 " << end + 8.0 << " 46\">\n";
    double x = emit_cells(svg, record.premise, 8.0);
    emit_cells(svg, record.hypothesis, x + 28.0);
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::string> dump_attention(Model& model, const std::vector<Example>& pairs,
                                        const std::string& prefix) {
    std::vector<AttentionRecord> records;
    records.reserve(pairs.size());
    for (const Example& ex : pairs)
        records.push_back(attention_record(model, ex.premise, ex.hypothesis, ex.id));

    std::vector<std::string> written;
    const std::string json_path = prefix + ".json";
    std::ofstream jout(json_path, std::ios::binary);
    if (!jout) throw IoError("cannot write attention JSON: " + json_path);
    jout << attention_json(records).dump(2) << '\n';
    written.push_back(json_path);

    for (const auto& rec : records) {
        const std::string svg_path = prefix + "_" + sanitize_filename(rec.id) + ".svg";
        std::ofstream sout(svg_path, std::ios::binary);
        if (!sout) throw IoError("cannot write attention SVG: " + svg_path);
        sout << attention_svg(rec);
        written.push_back(svg_path);
    }
    return written;
}

}  // namespace cian
