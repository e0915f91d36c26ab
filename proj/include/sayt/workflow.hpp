#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"
#include "sayt/policies.hpp"
#include "sayt/retrieval.hpp"

namespace sayt {

// Glue shared by the command-line tool and the Python module.

struct PolicyConfig {
    PolicyKind kind = PolicyKind::set;
    std::optional<StopwordList> stopwords;  // ss; default list when absent
    double threshold = default_similarity_threshold;  // sm
    std::optional<std::filesystem::path> checkpoint;  // dqn
    std::shared_ptr<EmbeddingTable const> table;      // sm, dqn
};

/// Throws InputError when a required resource for the kind is missing.
std::unique_ptr<TriggerPolicy> make_policy(PolicyConfig const &config);

/// Dense retriever over mean-pooled document vectors.
Retriever make_dense_retriever(std::vector<Document> const &docs, std::shared_ptr<EmbeddingTable const> table,
                               std::size_t top_k = default_top_k);
Retriever make_dense_retriever(DocVectors docs, std::shared_ptr<EmbeddingTable const> table,
                               std::size_t top_k = default_top_k);

Retriever make_bm25_retriever(Bm25Index index, std::size_t top_k = default_top_k);

}  // namespace sayt
