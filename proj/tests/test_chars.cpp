#include "doctest.h"

#include "cian/chars.hpp"
#include "cian/error.hpp"

using namespace cian;

// ---------------------------------------------------------------------------
// Alphabet
// ---------------------------------------------------------------------------

TEST_CASE("alphabet is the documented 50-symbol inventory in order") {
    CHECK(kAlphabet == "abcdefghijklmnopqrstuvwxyz0123456789,;.!?:'\"()[]{}");
    CHECK(kAlphabet.size() == 50);
    CHECK(CharAlphabet::size() == 50);

    CharAlphabet a;
    CHECK(a.index_of('a') == 0);
    CHECK(a.index_of('z') == 25);
    CHECK(a.index_of('0') == 26);
    CHECK(a.index_of('9') == 35);
    CHECK(a.index_of(',') == 36);
    CHECK(a.index_of('}') == 49);
}

TEST_CASE("alphabet round-trips every symbol and flags everything else OOV") {
    CharAlphabet a;
    for (std::size_t i = 0; i < kAlphabet.size(); ++i) {
        const char c = kAlphabet[i];
        CHECK(a.index_of(c) == int(i));
        CHECK(a.symbol_at(int(i)) == c);
        CHECK(a.contains(c));
    }
    for (char c : {'A', 'Z', '#', ' ', '\t', '-', '@'}) {
        CHECK(a.index_of(c) == kOovIndex);
        CHECK_FALSE(a.contains(c));
    }
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

TEST_CASE("tokenize lowercases and splits off alphabet punctuation") {
    CHECK(tokenize("The cat.") == std::vector<std::string>{"the", "cat", "."});
    CHECK(tokenize("LOVE") == std::vector<std::string>{"love"});
    CHECK(tokenize("don't stop!") == std::vector<std::string>{"don", "'", "t", "stop", "!"});
    CHECK(tokenize("a,b") == std::vector<std::string>{"a", ",", "b"});
    // '-' is not in the alphabet, so it stays inside the word
    CHECK(tokenize("well-known") == std::vector<std::string>{"well-known"});
}

TEST_CASE("tokenize rejects whitespace-only text") {
    CHECK_THROWS_AS(tokenize("   "), EmptySentenceError);
    CHECK_THROWS_AS(tokenize(""), EmptySentenceError);
    CHECK_THROWS_AS(tokenize(" \t\n"), EmptySentenceError);
}

// ---------------------------------------------------------------------------
// vectorize_word
// ---------------------------------------------------------------------------

TEST_CASE("vectorize_word maps characters to alphabet indices") {
    CharAlphabet a;
    CHECK(vectorize_word("the", a) == std::vector<int>{19, 7, 4});
    CHECK(vectorize_word("#", a) == std::vector<int>{kOovIndex});
    CHECK(vectorize_word("a1,", a) == std::vector<int>{0, 27, 36});
    CHECK_THROWS_AS(vectorize_word("", a), DataError);
}

TEST_CASE("vectorize_word output length equals character count") {
    CharAlphabet a;
    for (const std::string w : {"a", "cat", "zebra", "x#y@z"})
        CHECK(vectorize_word(w, a).size() == w.size());
}

TEST_CASE("tokenize_and_vectorize keeps words and index rows parallel") {
    CharAlphabet a;
    TokenizedSentence s = tokenize_and_vectorize("The cat.", a);
    REQUIRE(s.word_count() == 3);
    CHECK(s.words == std::vector<std::string>{"the", "cat", "."});
    CHECK(s.chars[0] == std::vector<int>{19, 7, 4});
    CHECK(s.chars[2] == std::vector<int>{38});  // '.'
}

// ---------------------------------------------------------------------------
// CharEmbeddingTable / embed_word
// ---------------------------------------------------------------------------

TEST_CASE("all-OOV word embeds to the zero matrix") {
    Rng rng(11);
    CharEmbeddingTable table(4, rng);
    Tape tape;
    Tensor c = table.embed_word(tape, {kOovIndex, kOovIndex}, 8);
    REQUIRE(c.shape() == Shape{4, 8});
    for (double v : c.data()) CHECK(v == 0.0);
}

TEST_CASE("short word leaves trailing padding columns zero") {
    Rng rng(12);
    CharEmbeddingTable table(3, rng);
    Tape tape;
    Tensor c = table.embed_word(tape, {0, 1}, 7);  // "ab"
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(c.at(r, 0) == table.table().at(0, r));
        CHECK(c.at(r, 1) == table.table().at(1, r));
        for (std::size_t j = 2; j < 7; ++j) CHECK(c.at(r, j) == 0.0);
    }
}

TEST_CASE("long words are truncated at l_max") {
    Rng rng(13);
    CharEmbeddingTable table(2, rng);
    Tape tape;
    std::vector<int> idx(15, 1);
    Tensor c = table.embed_word(tape, idx, 8);
    CHECK(c.shape() == Shape{2, 8});
}

TEST_CASE("OOV row stays zero and receives no gradient through a training step") {
    Rng rng(14);
    CharEmbeddingTable table(3, rng);
    Adam adam(NamedParams{{"charemb.table", table.table()}});

    Tape tape;
    Tensor c = table.embed_word(tape, {0, kOovIndex, 2}, 7);
    Tensor loss = sum(tape, c);
    tape.backward(loss);

    const auto& grad = table.table().grad();
    REQUIRE(grad.size() == table.table().size());
    for (std::size_t j = 0; j < 3; ++j) CHECK(grad[kOovIndex * 3 + j] == 0.0);
    CHECK(grad[0 * 3 + 0] != 0.0);

    adam.step();
    for (std::size_t j = 0; j < 3; ++j) CHECK(table.table().at(kOovIndex, j) == 0.0);
    CHECK(table.table().at(0, 0) != 0.0);
}

// ---------------------------------------------------------------------------
// pad_batch
// ---------------------------------------------------------------------------

TEST_CASE("pad_batch: single sentence gets an all-ones mask") {
    CharAlphabet a;
    PaddedBatch b = pad_batch({tokenize_and_vectorize("a cat", a)});
    REQUIRE(b.sentences.size() == 1);
    CHECK(b.n_max == 2);
    CHECK(b.mask[0] == std::vector<std::uint8_t>{1, 1});
}

TEST_CASE("pad_batch: lengths [2,5] pad to n_max 5") {
    CharAlphabet a;
    PaddedBatch b = pad_batch({tokenize_and_vectorize("a cat", a),
                               tokenize_and_vectorize("the dog runs very fast", a)});
    CHECK(b.n_max == 5);
    CHECK(b.mask[0] == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
    CHECK(b.mask[1] == std::vector<std::uint8_t>{1, 1, 1, 1, 1});
    REQUIRE(b.sentences[0].word_count() == 5);
    // padding words embed to all-zero matrices
    CHECK(b.sentences[0].chars[2] == std::vector<int>{kOovIndex});
    CHECK_THROWS_AS(pad_batch({}), DataError);
}
