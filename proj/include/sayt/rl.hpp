#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/neural.hpp"
#include "sayt/policies.hpp"
#include "sayt/retrieval.hpp"

namespace sayt {

/// WAIT -> 0; SEARCH -> 1 + delta if delta >= r_th, else -1.
double reward_of(Action action, double delta_map, double r_th);

/// One transition. For a non-terminal step the next state is the post-action
/// state with the next typed token already appended to q2, i.e. the state the
/// agent decides on next.
struct Experience {
    Tokens q1;
    Tokens q2;
    Action action = Action::wait;
    double reward = 0.0;
    Tokens next_q1;
    Tokens next_q2;
    bool terminal = false;
};

/// True when next_q1/next_q2 follow from (q1, q2, action).
bool transition_consistent(Experience const &exp);

/// Bounded FIFO ring; the oldest entry is evicted first.
class ReplayBuffer {
   public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(Experience exp);
    [[nodiscard]] std::size_t size() const { return m_items.size(); }
    [[nodiscard]] std::size_t capacity() const { return m_capacity; }
    /// 0 is the oldest retained entry.
    [[nodiscard]] Experience const &at(std::size_t i) const;
    /// Uniform draws with replacement, one engine call per draw.
    [[nodiscard]] std::vector<Experience const *> sample(std::size_t n, std::mt19937_64 &rng) const;

   private:
    std::size_t m_capacity;
    std::size_t m_head = 0;
    std::vector<Experience> m_items;
};

struct EnvStep {
    SessionState next;
    double reward = 0.0;
    double delta_map = 0.0;
    bool terminal = false;
};

/// Applies the action for the token just appended to state.q2. delta_map is
/// measured against the AP of the previous search (0 before the first one).
EnvStep env_step(SessionState const &state, Action action, bool is_last_token, Retriever const &retriever,
                 std::set<std::string> const &relevant, double r_th);

/// One engine draw decides whether to explore; a second picks the random
/// action. Greedy ties go to SEARCH.
Action epsilon_greedy(QValues const &q, double eps, std::mt19937_64 &rng);
Action greedy_action(QValues const &q);

/// r if terminal, else r + gamma * max_a Q_target(s', a).
double td_target(Experience const &exp, QNetworkParams const &target, double gamma);

struct TrainConfig {
    double gamma = 0.05;
    double eps_start = 1.0;
    double eps_decay = 0.995;
    double eps_min = 0.7;
    double alpha = 0.01;
    std::size_t batch = 32;
    double r_th = 0.0;
    std::size_t replay_capacity = 10000;
    std::size_t target_sync_interval = 100;
    std::size_t episodes = 1000;
    std::uint64_t seed = 42;
    QNetworkDims dims;

    /// Throws InputError when a field is out of range.
    void validate() const;
};

struct EpisodeLog {
    std::size_t episode = 0;
    double eps = 0.0;
    double total_reward = 0.0;
    double mean_loss = 0.0;
    std::size_t searches = 0;
};

struct TrainResult {
    QNetworkParams params;
    std::vector<EpisodeLog> log;
    double final_eps = 0.0;
    std::size_t updates = 0;
};

/// Deterministic given the seed. One engine stream is used for, in order:
/// weight initialization, the query order shuffle, then per step exploration
/// followed by replay sampling.
TrainResult train(TrainConfig const &config, std::vector<Query> const &queries, Retriever const &retriever,
                  Qrels const &qrels, std::shared_ptr<EmbeddingTable const> table);

/// CSV: episode,eps,total_reward,mean_loss,searches
void write_train_log(std::filesystem::path const &path, std::vector<EpisodeLog> const &log);

/// Argmax over the Q-network outputs, ties to SEARCH.
Action dqn_decide(QNetworkParams const &params, SessionState const &state);

class DqnPolicy final : public TriggerPolicy {
   public:
    explicit DqnPolicy(std::shared_ptr<QNetworkParams const> params);

    [[nodiscard]] Action decide(SessionState const &state, std::string const &new_token,
                                bool is_last_token) const override;
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::dqn; }

   private:
    std::shared_ptr<QNetworkParams const> m_params;
};

}  // namespace sayt
