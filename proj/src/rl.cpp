#include "sayt/rl.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "sayt/error.hpp"
#include "sayt/rng.hpp"

namespace sayt {

double reward_of(Action action, double delta_map, double r_th)
{
    if (action == Action::wait) {
        return 0.0;
    }
    return delta_map >= r_th ? 1.0 + delta_map : -1.0;
}

bool transition_consistent(Experience const &exp)
{
    Tokens q1 = exp.q1;
    Tokens q2 = exp.q2;
    if (exp.action == Action::search) {
        q1.insert(q1.end(), q2.begin(), q2.end());
        q2.clear();
    }
    if (exp.next_q1 != q1) {
        return false;
    }
    if (exp.terminal) {
        return exp.next_q2 == q2;
    }
    return exp.next_q2.size() == q2.size() + 1 && std::equal(q2.begin(), q2.end(), exp.next_q2.begin());
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : m_capacity(capacity)
{
    if (capacity == 0) {
        throw InputError("replay capacity must be positive");
    }
    m_items.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Experience exp)
{
    if (m_items.size() < m_capacity) {
        m_items.push_back(std::move(exp));
        return;
    }
    m_items[m_head] = std::move(exp);
    m_head = (m_head + 1) % m_capacity;
}

Experience const &ReplayBuffer::at(std::size_t i) const
{
    if (i >= m_items.size()) {
        throw InputError("replay index out of range");
    }
    return m_items[(m_head + i) % m_items.size()];
}

std::vector<Experience const *> ReplayBuffer::sample(std::size_t n, std::mt19937_64 &rng) const
{
    if (m_items.empty()) {
        throw InputError("cannot sample from an empty replay buffer");
    }
    std::vector<Experience const *> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(&m_items[uniform_index(rng, m_items.size())]);
    }
    return out;
}

EnvStep env_step(SessionState const &state, Action action, bool is_last_token, Retriever const &retriever,
                 std::set<std::string> const &relevant, double r_th)
{
    EnvStep out;
    double before = state.last_map;
    out.next = apply_action(state, action, retriever, relevant);
    out.delta_map = action == Action::search ? out.next.last_map - before : 0.0;
    out.reward = reward_of(action, out.delta_map, r_th);
    out.terminal = is_last_token;
    return out;
}

Action greedy_action(QValues const &q) { return q[1] >= q[0] ? Action::search : Action::wait; }

Action epsilon_greedy(QValues const &q, double eps, std::mt19937_64 &rng)
{
    if (uniform01(rng) < eps) {
        return uniform01(rng) < 0.5 ? Action::wait : Action::search;
    }
    return greedy_action(q);
}

double td_target(Experience const &exp, QNetworkParams const &target, double gamma)
{
    if (exp.terminal || gamma == 0.0) {
        return exp.reward;
    }
    auto q = qnet_forward(target, exp.next_q1, exp.next_q2);
    return exp.reward + gamma * std::max(q[0], q[1]);
}

void TrainConfig::validate() const
{
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw InputError("gamma must lie in [0, 1)");
    }
    if (!(eps_min >= 0.0 && eps_min <= eps_start && eps_start <= 1.0)) {
        throw InputError("need 0 <= eps_min <= eps_start <= 1");
    }
    if (!(eps_decay > 0.0 && eps_decay <= 1.0)) {
        throw InputError("eps_decay must lie in (0, 1]");
    }
    if (!(alpha > 0.0)) {
        throw InputError("learning rate must be positive");
    }
    if (batch == 0) {
        throw InputError("batch size must be at least 1");
    }
    if (replay_capacity < batch) {
        throw InputError("replay capacity must be at least the batch size");
    }
    if (target_sync_interval == 0) {
        throw InputError("target sync interval must be positive");
    }
}

TrainResult train(TrainConfig const &config, std::vector<Query> const &queries, Retriever const &retriever,
                  Qrels const &qrels, std::shared_ptr<EmbeddingTable const> table)
{
    config.validate();
    if (queries.empty()) {
        throw InputError("training needs at least one query");
    }
    std::vector<std::set<std::string>> relevant;
    relevant.reserve(queries.size());
    for (auto const &q : queries) {
        relevant.push_back(relevant_set(qrels, q.id));
        if (relevant.back().empty()) {
            throw InputError("no relevance judgments for training query " + q.id);
        }
    }

    std::mt19937_64 rng(config.seed);
    TrainResult result{make_qnetwork(std::move(table), config.dims, rng), {}, config.eps_start, 0};
    auto &online = result.params;
    QNetworkParams target = online;
    auto opt = AdamState::for_weights(online.weights, config.alpha);
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    shuffle(order, rng);

    ReplayBuffer replay(config.replay_capacity);
    std::vector<TrainingExample> batch(config.batch);
    double eps = config.eps_start;
    for (std::size_t episode = 0; episode < config.episodes; ++episode) {
        std::size_t qi = order[episode % order.size()];
        auto const &tokens = queries[qi].tokens;
        EpisodeLog entry;
        entry.episode = episode + 1;
        entry.eps = eps;
        double loss_sum = 0.0;
        std::size_t losses = 0;
        SessionState state;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            state.q2.push_back(tokens[t]);
            bool last = t + 1 == tokens.size();
            auto action = epsilon_greedy(qnet_forward(online, state.q1, state.q2), eps, rng);
            auto step = env_step(state, action, last, retriever, relevant[qi], config.r_th);

            Experience exp{state.q1, state.q2, action, step.reward, step.next.q1, step.next.q2, step.terminal};
            if (!last) {
                exp.next_q2.push_back(tokens[t + 1]);
            }
            replay.push(std::move(exp));
            entry.total_reward += step.reward;
            entry.searches += action == Action::search ? 1 : 0;
            state = std::move(step.next);

            if (replay.size() >= config.batch) {
                auto sampled = replay.sample(config.batch, rng);
                for (std::size_t k = 0; k < sampled.size(); ++k) {
                    auto const &e = *sampled[k];
                    batch[k] = {e.q1, e.q2, e.action, td_target(e, target, config.gamma)};
                }
                auto g = qnet_backward(online, batch);
                adam_step(online.weights, g.grads, opt);
                loss_sum += g.loss;
                ++losses;
                if (++result.updates % config.target_sync_interval == 0) {
                    target.weights = online.weights;
                }
            }
        }
        entry.mean_loss = losses > 0 ? loss_sum / static_cast<double>(losses) : 0.0;
        result.log.push_back(entry);
        eps = std::max(config.eps_min, eps * config.eps_decay);
    }
    result.final_eps = eps;
    return result;
}

void write_train_log(std::filesystem::path const &path, std::vector<EpisodeLog> const &log)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << "episode,eps,total_reward,mean_loss,searches\n";
    char buf[160];
    for (auto const &e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%zu\n", e.episode, e.eps, e.total_reward,
                      e.mean_loss, e.searches);
        out << buf;
    }
}

Action dqn_decide(QNetworkParams const &params, SessionState const &state)
{
    return greedy_action(qnet_forward(params, state.q1, state.q2));
}

DqnPolicy::DqnPolicy(std::shared_ptr<QNetworkParams const> params) : m_params(std::move(params))
{
    if (!m_params) {
        throw InputError("the dqn policy needs a checkpoint");
    }
}

Action DqnPolicy::decide(SessionState const &state, std::string const & /*new_token*/, bool /*is_last_token*/) const
{
    return dqn_decide(*m_params, state);
}

}  // namespace sayt
