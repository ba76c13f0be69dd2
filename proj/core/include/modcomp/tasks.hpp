#pragma once

#include "modcomp/data.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace modcomp {

// Fixed 64-token vocabulary: 4 reserved control tokens, then the content
// tokens a cipher may permute (digits, operators, function words).
struct Vocab {
    static constexpr int pad = 0;
    static constexpr int bos = 1;
    static constexpr int eos = 2;
    static constexpr int sep = 3;
    static constexpr int first_digit = 4;  // "0".."9" at ids 4..13
    static constexpr int plus = 14;
    static constexpr int minus = 15;
    static constexpr int equals = 16;
    static constexpr int question = 17;
    static constexpr int first_word = 18;
    static constexpr int first_content = first_digit;

    std::vector<std::string> tokens;

    static Vocab build();
    int size() const { return static_cast<int>(tokens.size()); }
    int n_words() const { return size() - first_word; }
    int digit_id(int d) const { return first_digit + d; }
    bool is_reserved(int id) const { return id < first_content; }
    std::string decode(const std::vector<int>& ids) const;
};

// Bijection over content token ids; reserved ids always map to themselves.
struct Cipher {
    std::vector<int> mapping;  // size = vocab size
    std::vector<int> inverse;
    int seed = 0;
    bool identity = false;

    int apply(int id) const { return mapping[id]; }
    int invert(int id) const { return inverse[id]; }
    std::vector<int> apply(const std::vector<int>& ids) const;
    std::vector<int> invert(const std::vector<int>& ids) const;
};

// Seeded single-cycle permutation of the content ids, so no content token
// maps to itself. The identity mapping is a debug mode, never the default.
Cipher build_cipher(const Vocab& vocab, int seed, bool identity = false);
std::pair<Vocab, Cipher> build_vocab_cipher(int seed, bool identity = false);

// 2..4 operand add/subtract chain over 0..99, evaluated left to right.
struct MathProblem {
    std::vector<int> operands;
    std::vector<int> ops;  // 0 is '+', 1 is '-'; size = operands.size() - 1

    int answer() const;
    std::uint64_t key() const;  // identity hash for split bucketing
};

// Train/eval splits never share a problem: each (operands, ops) tuple hashes
// into one of 17 buckets, 15 for training and 2 for evaluation.
bool in_eval_bucket(const MathProblem& p);

std::vector<int> render_number(const Vocab& vocab, int value);
Sample make_math_sample(const Vocab& vocab, const MathProblem& p, const std::string& origin);

// Cloze ground truth: the word associated with an ordered word pair.
int cloze_association(int word_i, int word_j, int n_words);

Dataset gen_math_corpus(int n, int seed);
Dataset gen_language_corpus(int n, int seed, const Cipher& cipher);

// Parallel m-item arithmetic eval sets, source-language and ciphered, each
// with an 8-item exemplar pool disjoint from the scored items.
std::pair<Dataset, Dataset> gen_eval_sets(int m, int seed, const Cipher& cipher);

// True when an operator token is later followed by the answer delimiter in
// the deciphered prompt; the language corpus rejects such samples.
bool arithmetic_like(const std::vector<int>& deciphered_prompt);

}  // namespace modcomp
