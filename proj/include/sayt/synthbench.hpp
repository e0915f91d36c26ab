#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"

namespace sayt {

/// Synthetic saliency corpus: every document holds one unique key token among
/// filler words; every query is a shuffle of 1-2 keys and stop-word padding.
/// Keys, fillers and stop-words come from disjoint vocabularies.
struct SynthSpec {
    std::size_t n_docs = 200;
    std::size_t n_queries = 50;
    std::size_t pad_min = 1;  // stop-words per query
    std::size_t pad_max = 5;
    /// Queries draw their keys from the keys of the first salient_vocab_size documents
    /// (capped at n_docs).
    std::size_t salient_vocab_size = 200;
    /// Stop-words used for padding, drawn from the default list.
    std::size_t stopword_pool = 24;
    std::size_t filler_vocab = 400;
    std::size_t doc_len_min = 8;  // filler tokens per document
    std::size_t doc_len_max = 20;
    std::size_t dim = 50;
    std::uint64_t seed = 7;

    void validate() const;
};

struct SynthCorpus {
    std::vector<Document> documents;
    std::vector<Query> queries;
    Qrels qrels;
    EmbeddingTable vectors;
    /// Every document key, i.e. the salient vocabulary.
    std::set<std::string> keys;
    std::vector<std::string> stopwords;
};

SynthCorpus generate(SynthSpec const &spec);

/// Writes docs.jsonl, queries.tsv, qrels.txt and vectors.txt into `dir`.
void write_synth(SynthCorpus const &corpus, std::filesystem::path const &dir);

}  // namespace sayt
