#include "cian/chars.hpp"

#include <cctype>

namespace cian {

CharAlphabet::CharAlphabet() {
    index_.fill(kOovIndex);
    for (std::size_t i = 0; i < kAlphabet.size(); ++i)
        index_[static_cast<unsigned char>(kAlphabet[i])] = static_cast<int>(i);
}

char CharAlphabet::symbol_at(int idx) const {
    if (idx < 0 || idx >= static_cast<int>(size()))
        throw DimensionError("symbol_at: index " + std::to_string(idx) + " outside 0..49");
    return kAlphabet[static_cast<std::size_t>(idx)];
}

namespace {

bool is_alphabet_punct(char c, const CharAlphabet& alphabet) {
    return alphabet.contains(c) && !std::isalnum(static_cast<unsigned char>(c));
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    static const CharAlphabet alphabet;
    std::vector<std::string> words;
    std::string current;
    auto flush = [&]() {
        if (!current.empty()) {
            words.push_back(current);
            current.clear();
        }
    };
    for (char raw : text) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (is_alphabet_punct(c, alphabet)) {
            flush();
            words.emplace_back(1, c);
        } else {
            current.push_back(c);
        }
    }
    flush();
    if (words.empty()) throw EmptySentenceError("tokenize: text is empty or whitespace-only");
    return words;
}

std::vector<int> vectorize_word(const std::string& word, const CharAlphabet& alphabet) {
    if (word.empty()) throw DataError("vectorize_word: empty word");
    std::vector<int> out;
    out.reserve(word.size());
    for (char c : word) out.push_back(alphabet.index_of(c));
    return out;
}

TokenizedSentence tokenize_and_vectorize(const std::string& text, const CharAlphabet& alphabet) {
    TokenizedSentence s;
    s.words = tokenize(text);
    s.chars.reserve(s.words.size());
    for (const auto& w : s.words) s.chars.push_back(vectorize_word(w, alphabet));
    return s;
}

CharEmbeddingTable::CharEmbeddingTable(std::size_t char_dim, Rng& rng) : dim_(char_dim) {
    table_ = Tensor::uniform({CharAlphabet::size() + 1, char_dim}, rng);
    // row kOovIndex is the shared zero row; embed_word never routes gradient
    // into it, so it stays exactly zero through training
    for (std::size_t c = 0; c < char_dim; ++c)
        table_.data()[static_cast<std::size_t>(kOovIndex) * char_dim + c] = 0.0;
}

Tensor CharEmbeddingTable::embed_word(Tape& tape, const std::vector<int>& indices,
                                      std::size_t l_max) const {
    if (indices.empty()) throw DataError("embed_word: empty index sequence");
    return embed_columns(tape, table_, indices, l_max, kOovIndex);
}

Tensor embed_word(Tape& tape, const std::vector<int>& indices, const CharEmbeddingTable& table,
                  std::size_t l_max) {
    return table.embed_word(tape, indices, l_max);
}

PaddedBatch pad_batch(const std::vector<TokenizedSentence>& sentences) {
    if (sentences.empty()) throw DataError("pad_batch: empty batch");
    PaddedBatch batch;
    for (const auto& s : sentences) batch.n_max = std::max(batch.n_max, s.word_count());
    batch.sentences = sentences;
    for (auto& s : batch.sentences) {
        std::vector<std::uint8_t> row(batch.n_max, 0);
        for (std::size_t i = 0; i < s.word_count(); ++i) row[i] = 1;
        while (s.word_count() < batch.n_max) {
            s.words.emplace_back("<pad>");
            s.chars.push_back({kOovIndex});
        }
        batch.mask.push_back(std::move(row));
    }
    return batch;
}

}  // namespace cian
