#include "modcomp/tasks.hpp"

#include "modcomp/error.hpp"
#include "modcomp/hash.hpp"

#include <algorithm>
#include <random>

namespace modcomp {

namespace {

constexpr int kVocabSize = 64;
constexpr int kExemplarPool = 8;

std::mt19937 seeded_rng(int seed, const std::string& stream) {
    const std::uint64_t h = fnv1a64(stream);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937(seq);
}

MathProblem draw_problem(std::mt19937& gen) {
    std::uniform_int_distribution<int> n_ops(2, 4);
    std::uniform_int_distribution<int> operand(0, 99);
    std::uniform_int_distribution<int> op(0, 1);
    MathProblem p;
    const int k = n_ops(gen);
    p.operands.resize(k);
    p.ops.resize(k - 1);
    for (int& o : p.operands) o = operand(gen);
    for (int& o : p.ops) o = op(gen);
    return p;
}

}  // namespace

Vocab Vocab::build() {
    Vocab v;
    v.tokens = {"<pad>", "<bos>", "<eos>", "<sep>"};
    for (int d = 0; d < 10; ++d) v.tokens.push_back(std::string(1, static_cast<char>('0' + d)));
    v.tokens.push_back("+");
    v.tokens.push_back("-");
    v.tokens.push_back("=");
    v.tokens.push_back("?");
    // 46 CV pseudo-words fill the vocabulary to 64.
    static const char consonants[] = {'b', 'd', 'k', 'l', 'm', 'n', 'r', 's', 't', 'v'};
    static const char vowels[] = {'a', 'e', 'i', 'o', 'u'};
    for (int c = 0; c < 10 && static_cast<int>(v.tokens.size()) < kVocabSize; ++c) {
        for (int w = 0; w < 5 && static_cast<int>(v.tokens.size()) < kVocabSize; ++w) {
            v.tokens.push_back(std::string{consonants[c], vowels[w]});
        }
    }
    return v;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ' ';
        const int id = ids[i];
        out += (id >= 0 && id < size()) ? tokens[id] : "<bad>";
    }
    return out;
}

std::vector<int> Cipher::apply(const std::vector<int>& ids) const {
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = mapping[ids[i]];
    return out;
}

std::vector<int> Cipher::invert(const std::vector<int>& ids) const {
    std::vector<int> out(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) out[i] = inverse[ids[i]];
    return out;
}

Cipher build_cipher(const Vocab& vocab, int seed, bool identity) {
    Cipher c;
    c.seed = seed;
    c.identity = identity;
    c.mapping.resize(vocab.size());
    for (int i = 0; i < vocab.size(); ++i) c.mapping[i] = i;
    if (!identity) {
        // Sattolo's shuffle yields a single cycle over the content ids, which
        // is fixed-point-free by construction.
        std::mt19937 gen = seeded_rng(seed, "cipher");
        const int lo = Vocab::first_content;
        for (int i = vocab.size() - 1; i > lo; --i) {
            std::uniform_int_distribution<int> pick(lo, i - 1);
            std::swap(c.mapping[i], c.mapping[pick(gen)]);
        }
    }
    c.inverse.resize(vocab.size());
    for (int i = 0; i < vocab.size(); ++i) c.inverse[c.mapping[i]] = i;
    return c;
}

std::pair<Vocab, Cipher> build_vocab_cipher(int seed, bool identity) {
    Vocab v = Vocab::build();
    Cipher c = build_cipher(v, seed, identity);
    return {std::move(v), std::move(c)};
}

int MathProblem::answer() const {
    int acc = operands.at(0);
    for (std::size_t i = 0; i < ops.size(); ++i) {
        acc = ops[i] == 0 ? acc + operands[i + 1] : acc - operands[i + 1];
    }
    return acc;
}

std::uint64_t MathProblem::key() const {
    std::uint64_t h = kFnvOffset;
    const auto mix = [&h](int v) {
        const std::uint32_t u = static_cast<std::uint32_t>(v);
        h = fnv1a64(&u, sizeof(u), h);
    };
    mix(static_cast<int>(operands.size()));
    for (int o : operands) mix(o);
    for (int o : ops) mix(o);
    return h;
}

bool in_eval_bucket(const MathProblem& p) { return p.key() % 17 >= 15; }

std::vector<int> render_number(const Vocab& vocab, int value) {
    std::vector<int> out;
    if (value < 0) {
        out.push_back(Vocab::minus);
        value = -value;
    }
    std::string digits = std::to_string(value);
    for (char ch : digits) out.push_back(vocab.digit_id(ch - '0'));
    return out;
}

Sample make_math_sample(const Vocab& vocab, const MathProblem& p, const std::string& origin) {
    Sample s;
    s.origin = origin;
    s.prompt.push_back(Vocab::bos);
    for (std::size_t i = 0; i < p.operands.size(); ++i) {
        if (i) s.prompt.push_back(p.ops[i - 1] == 0 ? Vocab::plus : Vocab::minus);
        const std::vector<int> num = render_number(vocab, p.operands[i]);
        s.prompt.insert(s.prompt.end(), num.begin(), num.end());
    }
    s.prompt.push_back(Vocab::equals);
    s.answer = render_number(vocab, p.answer());
    return s;
}

int cloze_association(int word_i, int word_j, int n_words) {
    return (word_i * 7 + word_j * 13 + 5) % n_words;
}

bool arithmetic_like(const std::vector<int>& deciphered_prompt) {
    bool saw_op = false;
    for (int id : deciphered_prompt) {
        if (id == Vocab::plus || id == Vocab::minus) saw_op = true;
        if (saw_op && id == Vocab::equals) return true;
    }
    return false;
}

Dataset gen_math_corpus(int n, int seed) {
    if (n < 1) throw DataError("corpus size must be >= 1");
    const Vocab vocab = Vocab::build();
    Dataset ds;
    ds.origin = "math";
    std::mt19937 gen = seeded_rng(seed, "math-corpus");
    ds.samples.reserve(n);
    while (static_cast<int>(ds.samples.size()) < n) {
        MathProblem p = draw_problem(gen);
        if (in_eval_bucket(p)) continue;
        ds.samples.push_back(make_math_sample(vocab, p, ds.origin));
    }
    return ds;
}

Dataset gen_language_corpus(int n, int seed, const Cipher& cipher) {
    if (n < 1) throw DataError("corpus size must be >= 1");
    const Vocab vocab = Vocab::build();
    Dataset ds;
    ds.origin = "lang";
    std::mt19937 gen = seeded_rng(seed, "lang-corpus");
    // Content pool for echo/translation: words, digits, and a thin slice of
    // operator symbols so the cipher is learned over the full content range.
    std::vector<int> pool;
    for (int id = Vocab::first_word; id < vocab.size(); ++id) pool.push_back(id);
    // Digits carry most of the downstream answer surface, so they are
    // upweighted against the 46 words.
    for (int rep = 0; rep < 4; ++rep) {
        for (int d = 0; d < 10; ++d) pool.push_back(vocab.digit_id(d));
    }
    pool.push_back(Vocab::plus);
    pool.push_back(Vocab::minus);
    pool.push_back(Vocab::equals);
    pool.push_back(Vocab::question);

    std::uniform_int_distribution<int> pick(0, static_cast<int>(pool.size()) - 1);
    std::uniform_int_distribution<int> seq_len(3, 8);
    std::uniform_int_distribution<int> word(0, vocab.n_words() - 1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    ds.samples.reserve(n);
    while (static_cast<int>(ds.samples.size()) < n) {
        Sample s;
        s.origin = ds.origin;
        const double kind = coin(gen);
        if (kind < 0.7) {
            // 0.4 translation in alternating directions, 0.3 echo of a
            // ciphered stream. A third of the translation prompts code-switch
            // per token, which only a token-level mapping can solve.
            const bool translation = kind < 0.4;
            const bool code_switch = translation && coin(gen) < 0.35;
            // Code-switched prompts always answer in cipher, otherwise the
            // expected answer surface would be ambiguous.
            const bool to_cipher = !translation || code_switch || coin(gen) < 0.5;
            std::vector<int> content;
            if (translation && coin(gen) < 0.5) {
                // Expression-shaped content, mirroring how parallel text quotes
                // arithmetic without solving it. No equals sign, so the
                // no-arithmetic filter still holds.
                std::uniform_int_distribution<int> digit(0, 9);
                std::uniform_int_distribution<int> terms(2, 3);
                const int t = terms(gen);
                for (int i = 0; i < t; ++i) {
                    if (i > 0) content.push_back(coin(gen) < 0.5 ? Vocab::plus : Vocab::minus);
                    content.push_back(vocab.digit_id(digit(gen)));
                }
            } else {
                const int k = seq_len(gen);
                content.resize(k);
                for (int& id : content) id = pool[pick(gen)];
            }
            s.prompt.push_back(Vocab::bos);
            for (int id : content) {
                bool plain = translation == to_cipher;
                if (code_switch) plain = coin(gen) < 0.5;
                s.prompt.push_back(plain ? id : cipher.apply(id));
            }
            s.prompt.push_back(Vocab::sep);
            s.answer = to_cipher ? cipher.apply(content) : content;
        } else {
            // cloze: two content tokens and "?" ask for their associate. One
            // rule per domain, each prompt token surfaced independently, so
            // the rule can only be applied through a token-level mapping. The
            // "?" surface selects the answer surface.
            const bool over_digits = coin(gen) < 0.5;
            const auto sur = [&](int id) { return coin(gen) < 0.5 ? cipher.apply(id) : id; };
            int a, b, c;
            if (over_digits) {
                std::uniform_int_distribution<int> digit(0, 9);
                a = vocab.digit_id(digit(gen));
                b = vocab.digit_id(digit(gen));
                c = vocab.digit_id(cloze_association(a - Vocab::first_digit,
                                                     b - Vocab::first_digit, 10));
            } else {
                a = Vocab::first_word + word(gen);
                b = Vocab::first_word + word(gen);
                c = Vocab::first_word + cloze_association(a - Vocab::first_word,
                                                          b - Vocab::first_word, vocab.n_words());
            }
            const int q = sur(Vocab::question);
            s.prompt = {Vocab::bos, sur(a), sur(b), q};
            s.answer = {q == Vocab::question ? c : cipher.apply(c)};
        }
        if (arithmetic_like(s.prompt) || arithmetic_like(cipher.invert(s.prompt))) continue;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

std::pair<Dataset, Dataset> gen_eval_sets(int m, int seed, const Cipher& cipher) {
    if (m < 1) throw DataError("eval size must be >= 1");
    const Vocab vocab = Vocab::build();
    Dataset src, tgt;
    src.origin = "eval-source";
    tgt.origin = "eval-target";
    std::mt19937 gen = seeded_rng(seed, "eval-sets");
    std::vector<std::uint64_t> used;
    const auto fresh = [&used](const MathProblem& p) {
        const std::uint64_t k = p.key();
        if (std::find(used.begin(), used.end(), k) != used.end()) return false;
        used.push_back(k);
        return true;
    };
    const auto push = [&](std::vector<Sample>& src_out, std::vector<Sample>& tgt_out,
                          const MathProblem& p) {
        Sample s = make_math_sample(vocab, p, src.origin);
        Sample t;
        t.origin = tgt.origin;
        t.prompt = cipher.apply(s.prompt);
        t.answer = cipher.apply(s.answer);
        src_out.push_back(std::move(s));
        tgt_out.push_back(std::move(t));
    };
    while (static_cast<int>(src.exemplars.size()) < kExemplarPool) {
        MathProblem p = draw_problem(gen);
        if (!in_eval_bucket(p) || !fresh(p)) continue;
        push(src.exemplars, tgt.exemplars, p);
    }
    while (static_cast<int>(src.samples.size()) < m) {
        MathProblem p = draw_problem(gen);
        if (!in_eval_bucket(p) || !fresh(p)) continue;
        push(src.samples, tgt.samples, p);
    }
    return {std::move(src), std::move(tgt)};
}

}  // namespace modcomp
