#pragma once

// Text to padded character-index matrices: alphabet, tokenizer, trainable
// character-embedding table with a pinned zero row for out-of-alphabet
// symbols and padding.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cian/tensor.hpp"

namespace cian {

// The 50-symbol inventory, in index order: a-z, 0-9, then punctuation.
inline constexpr std::string_view kAlphabet =
    "abcdefghijklmnopqrstuvwxyz0123456789,;.!?:'\"()[]{}";

// Index of the shared zero embedding row used for out-of-alphabet characters
// and padding columns. One past the last alphabet index.
inline constexpr int kOovIndex = 50;

class CharAlphabet {
public:
    CharAlphabet();

    static constexpr std::size_t size() { return 50; }

    // alphabet index in [0, 50), or kOovIndex for anything else
    int index_of(char c) const {
        return index_[static_cast<unsigned char>(c)];
    }

    // inverse lookup for in-alphabet indices
    char symbol_at(int idx) const;

    bool contains(char c) const { return index_of(c) != kOovIndex; }

private:
    std::array<int, 256> index_;
};

// Lowercases, splits on whitespace, and splits in-alphabet punctuation off as
// single-character tokens. Throws EmptySentenceError on whitespace-only text.
std::vector<std::string> tokenize(const std::string& text);

// Per character, the alphabet index or kOovIndex. Throws DataError on an
// empty word; never fails on unknown characters.
std::vector<int> vectorize_word(const std::string& word, const CharAlphabet& alphabet);

struct TokenizedSentence {
    std::vector<std::string> words;
    std::vector<std::vector<int>> chars;  // parallel to words

    std::size_t word_count() const { return words.size(); }
};

TokenizedSentence tokenize_and_vectorize(const std::string& text, const CharAlphabet& alphabet);

// 51 x d table: rows 0..49 are the trainable alphabet embeddings, row 50 is
// the zero row shared by padding and out-of-alphabet characters. The zero row
// never receives gradient, so Adam keeps it pinned at zero.
class CharEmbeddingTable {
public:
    CharEmbeddingTable(std::size_t char_dim, Rng& rng);

    std::size_t char_dim() const { return dim_; }
    Tensor& table() { return table_; }
    const Tensor& table() const { return table_; }

    // [d x l_max] matrix whose column j is the embedding of indices[j];
    // indices are truncated at l_max, trailing columns stay zero
    Tensor embed_word(Tape& tape, const std::vector<int>& indices, std::size_t l_max) const;

    void collect_params(NamedParams& out) const { out.push_back({"charemb.table", table_}); }

private:
    std::size_t dim_;
    Tensor table_;
};

// Free-function form mirroring embed_word above.
Tensor embed_word(Tape& tape, const std::vector<int>& indices, const CharEmbeddingTable& table,
                  std::size_t l_max);

// Sentences padded to a common word count with mask rows (1 = real word).
// Padding words are a single out-of-alphabet character, so their character
// matrices are exactly zero.
struct PaddedBatch {
    std::vector<TokenizedSentence> sentences;
    std::vector<std::vector<std::uint8_t>> mask;
    std::size_t n_max = 0;
};

PaddedBatch pad_batch(const std::vector<TokenizedSentence>& sentences);

}  // namespace cian
