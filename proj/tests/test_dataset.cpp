#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

#include "cian/dataset.hpp"
#include "cian/error.hpp"

using namespace cian;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "cian_dataset_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

fs::path write_fixture(const std::string& name, const std::string& text) {
    fs::path path = scratch_dir() / name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::vector<Example> synthetic_examples(std::size_t n, const std::string& prefix) {
    std::vector<Example> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back({"premise " + std::to_string(i), "hypothesis " + std::to_string(i), i % 3,
                       prefix + std::to_string(i), {}});
    return out;
}

std::multiset<std::string> ids_of(const std::vector<Example>& v) {
    std::multiset<std::string> out;
    for (const auto& ex : v) out.insert(ex.id);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Label parsing and format detection
// ---------------------------------------------------------------------------

TEST_CASE("label names map onto the fixed encoding") {
    CHECK(parse_label("entailment") == 0);
    CHECK(parse_label("neutral") == 1);
    CHECK(parse_label("contradiction") == 2);
    CHECK(parse_label("-") == std::nullopt);
    CHECK_THROWS_AS(parse_label("maybe"), DataError);
    CHECK_THROWS_AS(parse_label(""), DataError);
}

TEST_CASE("format detection keys on the file extension") {
    CHECK(format_from_path("dir/train.jsonl") == DataFormat::jsonl);
    CHECK(format_from_path("dir/train.json") == DataFormat::jsonl);
    CHECK(format_from_path("dir/train.tsv") == DataFormat::tsv);
    CHECK(format_from_path("dir/train.txt") == DataFormat::jsonl);
    CHECK(format_from_path("noext") == DataFormat::jsonl);
}

// ---------------------------------------------------------------------------
// JSONL loading
// ---------------------------------------------------------------------------

TEST_CASE("jsonl records are loaded and unlabeled ones dropped") {
    fs::path path = write_fixture(
        "basic.jsonl",
        R"({"sentence1":"a man sleeps","sentence2":"a man rests","gold_label":"entailment","pairID":"p1"})"
        "\n"
        R"({"sentence1":"a dog runs","sentence2":"a dog sits","gold_label":"contradiction","pairID":"p2"})"
        "\n"
        R"({"sentence1":"a bird flies","sentence2":"it is sunny","gold_label":"-","pairID":"p3"})"
        "\n"
        "\n"  // blank lines are skipped
        R"({"sentence1":"kids play","sentence2":"children are playing","gold_label":"neutral"})"
        "\n");

    LoadStats stats;
    std::vector<Example> data = load_dataset(path.string(), DataFormat::jsonl, &stats);
    REQUIRE(data.size() == 3);
    CHECK(stats.kept == 3);
    CHECK(stats.dropped_unlabeled == 1);

    CHECK(data[0].premise == "a man sleeps");
    CHECK(data[0].hypothesis == "a man rests");
    CHECK(data[0].label == 0);
    CHECK(data[0].id == "p1");
    CHECK(data[1].label == 2);
    CHECK(data[2].label == 1);
    CHECK(data[2].id == "line5");  // default id from the source line
}

TEST_CASE("tags are read from either annotation field") {
    fs::path path = write_fixture(
        "tags.jsonl",
        R"({"sentence1":"a","sentence2":"b","gold_label":"neutral","annotations":["NEGATION","ANTO"]})"
        "\n"
        R"({"sentence1":"c","sentence2":"d","gold_label":"neutral","tags":"WORD_OVERLAP"})"
        "\n"
        R"({"sentence1":"e","sentence2":"f","gold_label":"neutral"})"
        "\n");

    std::vector<Example> data = load_dataset(path.string(), DataFormat::jsonl);
    REQUIRE(data.size() == 3);
    CHECK(data[0].tags == std::vector<std::string>{"NEGATION", "ANTO"});
    CHECK(data[1].tags == std::vector<std::string>{"WORD_OVERLAP"});
    CHECK(data[2].tags.empty());
}

TEST_CASE("an empty file loads as an empty dataset with a warning") {
    fs::path path = write_fixture("empty.jsonl", "");
    LoadStats stats;
    std::ostringstream captured;
    std::streambuf* old = std::cerr.rdbuf(captured.rdbuf());
    std::vector<Example> data = load_dataset(path.string(), DataFormat::jsonl, &stats);
    std::cerr.rdbuf(old);
    CHECK(data.empty());
    CHECK(stats.kept == 0);
    CHECK(captured.str().find("empty") != std::string::npos);
}

TEST_CASE("jsonl errors name the offending line") {
    fs::path bad_label = write_fixture(
        "bad_label.jsonl",
        R"({"sentence1":"a","sentence2":"b","gold_label":"entailment"})"
        "\n"
        R"({"sentence1":"c","sentence2":"d","gold_label":"maybe"})"
        "\n");
    try {
        load_dataset(bad_label.string(), DataFormat::jsonl);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    fs::path bad_json = write_fixture("bad_json.jsonl", "{not json at all\n");
    try {
        load_dataset(bad_json.string(), DataFormat::jsonl);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    fs::path missing_field = write_fixture(
        "missing_field.jsonl", R"({"sentence1":"a","gold_label":"entailment"})"
                               "\n");
    CHECK_THROWS_AS(load_dataset(missing_field.string(), DataFormat::jsonl), DataError);

    CHECK_THROWS_AS(load_dataset((scratch_dir() / "absent.jsonl").string(), DataFormat::jsonl),
                    IoError);
}

// ---------------------------------------------------------------------------
// TSV loading
// ---------------------------------------------------------------------------

TEST_CASE("tsv rows are premise, hypothesis, label") {
    fs::path path = write_fixture("ok.tsv",
                                  "a man sleeps\ta man rests\tentailment\n"
                                  "a dog runs\ta dog sits\tcontradiction\n");
    std::vector<Example> data = load_dataset(path.string(), DataFormat::tsv);
    REQUIRE(data.size() == 2);
    CHECK(data[0].premise == "a man sleeps");
    CHECK(data[0].hypothesis == "a man rests");
    CHECK(data[0].label == 0);
    CHECK(data[1].label == 2);
    CHECK(data[0].id == "line1");
}

TEST_CASE("tsv rows with the wrong column count are rejected") {
    fs::path path = write_fixture("bad_cols.tsv", "only\ttwo\n");
    try {
        load_dataset(path.string(), DataFormat::tsv);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    fs::path extra = write_fixture("extra_cols.tsv", "a\tb\tentailment\td\n");
    CHECK_THROWS_AS(load_dataset(extra.string(), DataFormat::tsv), DataError);
}

TEST_CASE("tsv drops unlabeled rows like jsonl does") {
    fs::path path = write_fixture("dash.tsv", "a\tb\t-\nc\td\tneutral\n");
    LoadStats stats;
    std::vector<Example> data = load_dataset(path.string(), DataFormat::tsv, &stats);
    REQUIRE(data.size() == 1);
    CHECK(stats.dropped_unlabeled == 1);
}

// ---------------------------------------------------------------------------
// Epoch mixing
// ---------------------------------------------------------------------------

TEST_CASE("an epoch is the primary set plus a fixed auxiliary quota") {
    std::vector<Example> primary = synthetic_examples(10, "p");
    std::vector<Example> aux = synthetic_examples(50, "a");
    Rng rng(7);

    std::vector<Example> epoch = build_epoch(primary, aux, 0.2, rng);
    CHECK(epoch.size() == 10 + 10);  // floor(0.2 * 50)

    std::size_t from_primary = 0, from_aux = 0;
    std::set<std::string> aux_ids;
    for (const auto& ex : epoch) {
        if (ex.id[0] == 'p') ++from_primary;
        if (ex.id[0] == 'a') {
            ++from_aux;
            aux_ids.insert(ex.id);
        }
    }
    CHECK(from_primary == 10);
    CHECK(from_aux == 10);
    CHECK(aux_ids.size() == 10);  // sampled without replacement

    // every primary example appears exactly once
    CHECK(ids_of(epoch).count("p3") == 1);
}

TEST_CASE("zero fraction or an empty auxiliary set reduces to the primary set") {
    std::vector<Example> primary = synthetic_examples(6, "p");
    std::vector<Example> aux = synthetic_examples(20, "a");
    Rng rng(8);

    CHECK(ids_of(build_epoch(primary, aux, 0.0, rng)) == ids_of(primary));
    CHECK(ids_of(build_epoch(primary, {}, 0.5, rng)) == ids_of(primary));
}

TEST_CASE("successive epochs draw different auxiliary slices") {
    std::vector<Example> primary = synthetic_examples(4, "p");
    std::vector<Example> aux = synthetic_examples(60, "a");
    Rng rng(9);

    auto aux_slice = [&] {
        std::set<std::string> ids;
        for (const auto& ex : build_epoch(primary, aux, 0.2, rng))
            if (ex.id[0] == 'a') ids.insert(ex.id);
        return ids;
    };
    std::set<std::string> first = aux_slice();
    std::set<std::string> second = aux_slice();
    REQUIRE(first.size() == 12);
    REQUIRE(second.size() == 12);
    CHECK(first != second);
}

TEST_CASE("epoch order is shuffled") {
    std::vector<Example> primary = synthetic_examples(40, "p");
    Rng rng(10);
    std::vector<Example> epoch = build_epoch(primary, {}, 0.0, rng);
    REQUIRE(epoch.size() == 40);
    bool reordered = false;
    for (std::size_t i = 0; i < 40; ++i)
        if (epoch[i].id != primary[i].id) reordered = true;
    CHECK(reordered);
    CHECK(ids_of(epoch) == ids_of(primary));
}

TEST_CASE("epoch construction validates its inputs") {
    std::vector<Example> primary = synthetic_examples(3, "p");
    std::vector<Example> aux = synthetic_examples(3, "a");
    Rng rng(11);
    CHECK_THROWS_AS(build_epoch({}, aux, 0.2, rng), DataError);
    CHECK_THROWS_AS(build_epoch(primary, aux, -0.1, rng), ConfigError);
    CHECK_THROWS_AS(build_epoch(primary, aux, 1.5, rng), ConfigError);
}
