#include "sayt/policies.hpp"

#include "sayt/error.hpp"
#include "sayt/metrics.hpp"

namespace sayt {

std::string_view to_string(Action a) { return a == Action::search ? "SEARCH" : "WAIT"; }

std::string_view to_string(PolicyKind kind)
{
    switch (kind) {
        case PolicyKind::set: return "set";
        case PolicyKind::slt: return "slt";
        case PolicyKind::ss: return "ss";
        case PolicyKind::sm: return "sm";
        case PolicyKind::dqn: return "dqn";
    }
    return "?";
}

PolicyKind parse_policy_kind(std::string_view name)
{
    for (auto kind : {PolicyKind::set, PolicyKind::slt, PolicyKind::ss, PolicyKind::sm, PolicyKind::dqn}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw InputError("unknown policy '" + std::string(name) + "' (expected set, slt, ss, sm or dqn)");
}

Tokens SessionState::prefix() const
{
    Tokens out = q1;
    out.insert(out.end(), q2.begin(), q2.end());
    return out;
}

Action decide_static(PolicyKind kind, SessionState const & /*state*/, std::string const &new_token,
                     bool is_last_token, StopwordList const &stopwords)
{
    switch (kind) {
        case PolicyKind::set:
            return Action::search;
        case PolicyKind::slt:
            return is_last_token ? Action::search : Action::wait;
        case PolicyKind::ss:
            return is_stopword(stopwords, new_token) ? Action::wait : Action::search;
        default:
            throw InputError("decide_static handles only set, slt and ss");
    }
}

Action decide_similarity(SessionState const &state, std::string const & /*new_token*/, double threshold,
                         EmbeddingTable const &table)
{
    Vector current = sentence_embedding(state.prefix(), table);
    Vector searched = state.searched_vector.value_or(Vector::Zero(current.size()));
    return cosine_distance(searched, current) >= threshold ? Action::search : Action::wait;
}

SessionState apply_action(SessionState state, Action action, Retriever const &retriever,
                          std::set<std::string> const &relevant)
{
    if (action == Action::wait) {
        return state;
    }
    state.q1.insert(state.q1.end(), state.q2.begin(), state.q2.end());
    state.q2.clear();
    state.last_ranking = retriever.retrieve(state.q1);
    state.last_map = relevant.empty() ? 0.0 : average_precision(state.last_ranking, relevant);
    return state;
}

StaticPolicy::StaticPolicy(PolicyKind kind, StopwordList stopwords)
    : m_kind(kind), m_stopwords(std::move(stopwords))
{
    if (kind != PolicyKind::set && kind != PolicyKind::slt && kind != PolicyKind::ss) {
        throw InputError("StaticPolicy supports set, slt and ss");
    }
}

Action StaticPolicy::decide(SessionState const &state, std::string const &new_token, bool is_last_token) const
{
    return decide_static(m_kind, state, new_token, is_last_token, m_stopwords);
}

SimilarityPolicy::SimilarityPolicy(std::shared_ptr<EmbeddingTable const> table, double threshold)
    : m_table(std::move(table)), m_threshold(threshold)
{
    if (!m_table) {
        throw InputError("similarity matching needs word vectors");
    }
    if (threshold < 0.0) {
        throw InputError("similarity threshold must be non-negative");
    }
}

Action SimilarityPolicy::decide(SessionState const &state, std::string const &new_token,
                                bool /*is_last_token*/) const
{
    return decide_similarity(state, new_token, m_threshold, *m_table);
}

void SimilarityPolicy::on_search(SessionState &state) const
{
    state.searched_vector = sentence_embedding(state.q1, *m_table);
}

}  // namespace sayt
