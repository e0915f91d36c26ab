#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"

namespace sayt {

struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;

    bool operator==(Posting const &) const = default;
};

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(Bm25Params const &) const = default;
};

struct Bm25Index {
    std::map<std::string, std::vector<Posting>> postings;
    std::vector<std::uint32_t> doc_lengths;
    std::vector<std::string> doc_ids;
    std::map<std::string, std::uint32_t> df;
    double avgdl = 0.0;
    Bm25Params params;

    [[nodiscard]] std::size_t num_docs() const { return doc_ids.size(); }
    [[nodiscard]] double idf(std::string const &term) const;

    bool operator==(Bm25Index const &) const = default;
};

Bm25Index build_index(std::vector<Document> const &docs, Bm25Params params = {});

/// Lucene-style BM25: idf = ln((N - df + 0.5) / (df + 0.5) + 1). Repeated query
/// terms contribute once per occurrence.
double bm25_score(Bm25Index const &index, Tokens const &query, std::uint32_t doc);

/// Versioned binary layout starting with the magic bytes "ISTL1"; see
/// docs/index_format.md.
void save_index(Bm25Index const &index, std::filesystem::path const &path);
Bm25Index load_index(std::filesystem::path const &path);

struct ScoredDoc {
    std::string id;
    double score;

    bool operator==(ScoredDoc const &) const = default;
};

/// Descending by score, ties by ascending doc id.
using Ranking = std::vector<ScoredDoc>;

/// Cosine-similarity retriever over mean-pooled document vectors.
struct DenseStore {
    DocVectors docs;
    std::shared_ptr<EmbeddingTable const> table;
};

constexpr std::size_t default_top_k = 1000;

/// The black-box search engine: either BM25 or dense cosine similarity.
class Retriever {
   public:
    enum class Kind { bm25, embedding };

    Retriever(std::shared_ptr<Bm25Index const> index, std::size_t top_k = default_top_k);
    Retriever(std::shared_ptr<DenseStore const> store, std::size_t top_k = default_top_k);

    [[nodiscard]] Kind kind() const;
    [[nodiscard]] std::size_t top_k() const { return m_top_k; }
    [[nodiscard]] std::size_t num_docs() const;

    /// Pure function of (engine, query, k). An empty query yields an empty ranking.
    [[nodiscard]] Ranking retrieve(Tokens const &query) const;
    [[nodiscard]] Ranking retrieve(Tokens const &query, std::size_t k) const;

    /// Dense kind only: rank by cosine similarity to a query vector.
    [[nodiscard]] Ranking retrieve_vector(Vector const &query, std::size_t k) const;

   private:
    std::variant<std::shared_ptr<Bm25Index const>, std::shared_ptr<DenseStore const>> m_engine;
    std::size_t m_top_k;
};

}  // namespace sayt
