#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace sayt {

using Tokens = std::vector<std::string>;

/// Lowercases, splits on whitespace and strips punctuation from both ends of
/// every token. Tokens that become empty are dropped. Input is UTF-8; only
/// ASCII letters are case-folded.
Tokens tokenize(std::string_view text);

struct Document {
    std::string id;
    std::string text;
    Tokens tokens;

    bool operator==(Document const &) const = default;
};

struct Query {
    std::string id;
    std::string raw;
    Tokens tokens;

    bool operator==(Query const &) const = default;
};

/// query id -> (doc id -> relevance grade >= 1)
using Qrels = std::map<std::string, std::map<std::string, int>>;

class StopwordList {
   public:
    StopwordList() = default;
    explicit StopwordList(std::unordered_set<std::string> words) : m_words(std::move(words)) {}

    [[nodiscard]] bool contains(std::string_view token) const
    {
        return m_words.find(std::string(token)) != m_words.end();
    }
    [[nodiscard]] std::size_t size() const { return m_words.size(); }
    [[nodiscard]] bool empty() const { return m_words.empty(); }
    /// Sorted copy, for reproducible iteration.
    [[nodiscard]] std::vector<std::string> sorted() const;

   private:
    std::unordered_set<std::string> m_words;
};

bool is_stopword(StopwordList const &list, std::string_view token);

/// JSON lines, one {"id": ..., "text": ...} object per line.
std::vector<Document> load_documents(std::filesystem::path const &path);
void write_documents(std::filesystem::path const &path, std::vector<Document> const &docs);

/// TSV, id<TAB>text per line.
std::vector<Query> load_queries(std::filesystem::path const &path);
void write_queries(std::filesystem::path const &path, std::vector<Query> const &queries);

/// TREC qrels: "qid iter docid rel". Non-positive grades are dropped.
Qrels load_qrels(std::filesystem::path const &path);
void write_qrels(std::filesystem::path const &path, Qrels const &qrels);

/// One token per line; blank lines and lines starting with '#' are skipped.
StopwordList load_stopwords(std::filesystem::path const &path);

/// Built-in English list, identical to data/stopwords.txt.
StopwordList default_stopwords();
std::vector<std::string> const &default_stopword_words();

/// Set of relevant doc ids for a query; empty if the query has no judgments.
std::set<std::string> relevant_set(Qrels const &qrels, std::string const &query_id);

}  // namespace sayt
