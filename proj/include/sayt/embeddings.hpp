#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "sayt/corpus.hpp"

namespace sayt {

using Vector = Eigen::VectorXd;

class EmbeddingTable {
   public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : m_dim(dim) {}

    [[nodiscard]] std::size_t dim() const { return m_dim; }
    [[nodiscard]] std::size_t size() const { return m_vectors.size(); }
    [[nodiscard]] bool contains(std::string_view token) const
    {
        return m_vectors.find(std::string(token)) != m_vectors.end();
    }
    /// Stored vector, or nullptr for an out-of-vocabulary token.
    [[nodiscard]] Vector const *find(std::string_view token) const;

    /// Inserts or replaces. Throws InputError on a dimension mismatch.
    void set(std::string token, Vector vec);

    /// Tokens in lexicographic order.
    [[nodiscard]] std::vector<std::string> tokens() const;

   private:
    std::size_t m_dim = 0;
    std::unordered_map<std::string, Vector> m_vectors;
};

/// Text format: a token followed by d reals per line. The first line fixes d.
/// Duplicate tokens keep the last vector; a warning is appended per duplicate.
EmbeddingTable load_word_vectors(std::filesystem::path const &path,
                                 std::vector<std::string> *warnings = nullptr);
void write_word_vectors(std::filesystem::path const &path, EmbeddingTable const &table);

/// Table entry for the token, or zeros when it is out of vocabulary.
Vector token_vector(EmbeddingTable const &table, std::string_view token);

/// Mean of in-vocabulary token vectors; zeros if there are none.
Vector sentence_embedding(Tokens const &tokens, EmbeddingTable const &table);

/// 1 - cos(u, v). Returns 1.0 when either vector has zero norm.
double cosine_distance(Vector const &u, Vector const &v);

/// Precomputed document vectors, in corpus order.
struct DocVectors {
    std::vector<std::string> ids;
    std::vector<Vector> vectors;
};

DocVectors embed_documents(std::vector<Document> const &docs, EmbeddingTable const &table);

/// JSON lines {"id": ..., "vector": [...]}.
void write_doc_vectors(std::filesystem::path const &path, DocVectors const &store);
DocVectors load_doc_vectors(std::filesystem::path const &path);

}  // namespace sayt
