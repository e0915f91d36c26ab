#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"
#include "sayt/retrieval.hpp"

namespace sayt {

enum class Action { wait, search };

std::string_view to_string(Action a);

enum class PolicyKind { set, slt, ss, sm, dqn };

std::string_view to_string(PolicyKind kind);
/// Accepts the lowercase names "set", "slt", "ss", "sm", "dqn".
PolicyKind parse_policy_kind(std::string_view name);

/// The agent's view of a partially typed query. q1 ++ q2 is always the typed
/// prefix; q1 is what was last sent to the engine.
struct SessionState {
    Tokens q1;
    Tokens q2;
    Ranking last_ranking;
    double last_map = 0.0;
    /// Similarity matching only: embedding of the last searched prefix.
    std::optional<Vector> searched_vector;

    [[nodiscard]] Tokens prefix() const;
};

class TriggerPolicy {
   public:
    virtual ~TriggerPolicy() = default;

    /// Called after the new token has been appended to state.q2.
    [[nodiscard]] virtual Action decide(SessionState const &state, std::string const &new_token,
                                        bool is_last_token) const = 0;
    /// Hook run after a SEARCH has been applied to the state.
    virtual void on_search(SessionState & /*state*/) const {}
    [[nodiscard]] virtual PolicyKind kind() const = 0;
    [[nodiscard]] virtual std::string name() const { return std::string(to_string(kind())); }
};

/// SET searches on every token, SLT only on the last one, SS on every token
/// that is not a stop-word.
Action decide_static(PolicyKind kind, SessionState const &state, std::string const &new_token,
                     bool is_last_token, StopwordList const &stopwords);

/// Similarity matching: SEARCH iff the cosine distance between the embedding
/// of the last searched prefix (zeros before any search) and the current
/// prefix reaches the threshold.
Action decide_similarity(SessionState const &state, std::string const &new_token, double threshold,
                         EmbeddingTable const &table);

/// WAIT leaves the state untouched. SEARCH moves q2 into q1, retrieves the
/// prefix and records its AP against `relevant` (0 when there are no judgments).
SessionState apply_action(SessionState state, Action action, Retriever const &retriever,
                          std::set<std::string> const &relevant);

class StaticPolicy final : public TriggerPolicy {
   public:
    explicit StaticPolicy(PolicyKind kind, StopwordList stopwords = {});

    [[nodiscard]] Action decide(SessionState const &state, std::string const &new_token,
                                bool is_last_token) const override;
    [[nodiscard]] PolicyKind kind() const override { return m_kind; }

   private:
    PolicyKind m_kind;
    StopwordList m_stopwords;
};

constexpr double default_similarity_threshold = 0.1;

class SimilarityPolicy final : public TriggerPolicy {
   public:
    SimilarityPolicy(std::shared_ptr<EmbeddingTable const> table,
                     double threshold = default_similarity_threshold);

    [[nodiscard]] Action decide(SessionState const &state, std::string const &new_token,
                                bool is_last_token) const override;
    void on_search(SessionState &state) const override;
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::sm; }

   private:
    std::shared_ptr<EmbeddingTable const> m_table;
    double m_threshold;
};

}  // namespace sayt
