#include "sayt/synthbench.hpp"

#include <algorithm>
#include <cstdio>

#include "sayt/error.hpp"
#include "sayt/rng.hpp"

namespace sayt {

namespace {

constexpr char kConsonants[] = "bdfgklmnprstvz";
constexpr char kVowels[] = "aeiou";

std::string pseudo_word(std::mt19937_64 &rng, std::size_t syllables)
{
    std::string w;
    for (std::size_t s = 0; s < syllables; ++s) {
        w += kConsonants[uniform_index(rng, sizeof kConsonants - 1)];
        w += kVowels[uniform_index(rng, sizeof kVowels - 1)];
    }
    return w;
}

std::vector<std::string> fresh_words(std::mt19937_64 &rng, std::size_t n, std::size_t syllables,
                                     std::set<std::string> &taken)
{
    std::vector<std::string> out;
    while (out.size() < n) {
        auto w = pseudo_word(rng, syllables);
        if (taken.insert(w).second) {
            out.push_back(std::move(w));
        }
    }
    return out;
}

Vector random_unit(std::mt19937_64 &rng, std::size_t dim)
{
    Vector v(static_cast<Eigen::Index>(dim));
    for (auto &x : v) {
        x = normal(rng);
    }
    return v / v.norm();
}

std::string join(Tokens const &tokens)
{
    std::string out;
    for (auto const &t : tokens) {
        if (!out.empty()) {
            out += ' ';
        }
        out += t;
    }
    return out;
}

std::string zero_padded(char prefix, std::size_t i, std::size_t n)
{
    auto digits = std::to_string(i);
    auto width = std::to_string(n > 0 ? n - 1 : 0).size();
    return prefix + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

}  // namespace

void SynthSpec::validate() const
{
    if (n_docs == 0 || n_queries == 0) {
        throw InputError("synthetic corpus needs documents and queries");
    }
    if (salient_vocab_size == 0) {
        throw InputError("salient_vocab_size must be positive");
    }
    if (pad_min > pad_max) {
        throw InputError("pad_min must not exceed pad_max");
    }
    if (stopword_pool == 0 || stopword_pool > default_stopword_words().size()) {
        throw InputError("stopword_pool must lie in [1, " + std::to_string(default_stopword_words().size()) + "]");
    }
    if (filler_vocab == 0 || doc_len_min > doc_len_max) {
        throw InputError("invalid filler settings");
    }
    if (dim == 0) {
        throw InputError("vector dimension must be positive");
    }
}

SynthCorpus generate(SynthSpec const &spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    SynthCorpus out;

    auto pool = default_stopword_words();
    shuffle(pool, rng);
    pool.resize(spec.stopword_pool);
    std::sort(pool.begin(), pool.end());
    out.stopwords = pool;

    std::set<std::string> taken(default_stopword_words().begin(), default_stopword_words().end());
    auto keys = fresh_words(rng, spec.n_docs, 3, taken);
    auto fillers = fresh_words(rng, spec.filler_vocab, 2, taken);
    out.keys.insert(keys.begin(), keys.end());

    for (std::size_t d = 0; d < spec.n_docs; ++d) {
        std::size_t len = spec.doc_len_min + uniform_index(rng, spec.doc_len_max - spec.doc_len_min + 1);
        Tokens tokens;
        for (std::size_t i = 0; i < len; ++i) {
            tokens.push_back(fillers[uniform_index(rng, fillers.size())]);
        }
        tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, len + 1)), keys[d]);
        Document doc;
        doc.id = zero_padded('d', d, spec.n_docs);
        doc.text = join(tokens) + ".";
        doc.tokens = tokenize(doc.text);
        out.documents.push_back(std::move(doc));
    }

    std::size_t const salient = std::min(spec.salient_vocab_size, spec.n_docs);
    for (std::size_t q = 0; q < spec.n_queries; ++q) {
        std::size_t n_keys = std::min<std::size_t>(1 + uniform_index(rng, 2), salient);
        std::vector<std::size_t> picked;
        while (picked.size() < n_keys) {
            auto k = uniform_index(rng, salient);
            if (std::find(picked.begin(), picked.end(), k) == picked.end()) {
                picked.push_back(k);
            }
        }
        std::size_t pad = spec.pad_min + uniform_index(rng, spec.pad_max - spec.pad_min + 1);
        Tokens tokens;
        for (auto k : picked) {
            tokens.push_back(keys[k]);
        }
        for (std::size_t i = 0; i < pad; ++i) {
            tokens.push_back(pool[uniform_index(rng, pool.size())]);
        }
        shuffle(tokens, rng);

        Query query;
        query.id = zero_padded('q', q, spec.n_queries);
        query.raw = join(tokens);
        query.raw[0] = static_cast<char>(query.raw[0] - 'a' + 'A');
        query.raw += "?";
        query.tokens = tokenize(query.raw);
        for (auto k : picked) {
            out.qrels[query.id][out.documents[k].id] = 1;
        }
        out.queries.push_back(std::move(query));
    }

    out.vectors = EmbeddingTable(spec.dim);
    std::vector<std::string> vocab = pool;
    vocab.insert(vocab.end(), keys.begin(), keys.end());
    vocab.insert(vocab.end(), fillers.begin(), fillers.end());
    for (auto const &tok : vocab) {
        out.vectors.set(tok, random_unit(rng, spec.dim));
    }
    return out;
}

void write_synth(SynthCorpus const &corpus, std::filesystem::path const &dir)
{
    std::filesystem::create_directories(dir);
    write_documents(dir / "docs.jsonl", corpus.documents);
    write_queries(dir / "queries.tsv", corpus.queries);
    write_qrels(dir / "qrels.txt", corpus.qrels);
    write_word_vectors(dir / "vectors.txt", corpus.vectors);
}

}  // namespace sayt
