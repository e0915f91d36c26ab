// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"
#include "sayt/evalharness.hpp"
#include "sayt/metrics.hpp"
#include "sayt/neural.hpp"
#include "sayt/policies.hpp"
#include "sayt/retrieval.hpp"
#include "sayt/rl.hpp"
#include "sayt/rng.hpp"
#include "sayt/synthbench.hpp"
#include "sayt/workflow.hpp"

namespace fs = std::filesystem;
using namespace sayt;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, std::string const &what)
    {
        if (!ok) {
            pass = false;
            if (!detail.empty()) {
                detail += "; ";
            }
            detail += what;
        }
    }
};

int failures = 0;

void criterion(int id, std::string const &title, double budget_s, std::function<Outcome()> const &body)
{
    auto t0 = Clock::now();
    Outcome out;
    try {
        out = body();
    } catch (std::exception const &e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_s > 0.0 && secs > budget_s) {
        out.require(false, "runtime " + std::to_string(secs) + " s over budget");
    }
    std::printf("%s %2d %s (%.2f s)%s%s\n", out.pass ? "PASS" : "FAIL", id, title.c_str(), secs,
                out.detail.empty() ? "" : " : ", out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) {
        ++failures;
    }
}

std::string fmt(char const *pattern, double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

struct Bench {
    std::vector<Query> queries;
    Qrels qrels;
    Retriever retriever;
    std::shared_ptr<EmbeddingTable const> table;
};

Bench load_mini()
{
    fs::path dir = SAYT_DATA_DIR "/mini";
    auto table = std::make_shared<EmbeddingTable const>(load_word_vectors(dir / "vectors.txt"));
    return {load_queries(dir / "queries.tsv"), load_qrels(dir / "qrels.txt"),
            make_bm25_retriever(build_index(load_documents(dir / "docs.jsonl"))), table};
}

Report evaluate(TriggerPolicy const &policy, Bench const &b, BestMaps const &best)
{
    return run_evaluation(policy, b.queries, b.retriever, b.qrels, best);
}

// Reference AP: mean over relevant documents of precision at their rank.
double brute_force_ap(std::vector<std::string> const &ids, std::set<std::string> const &relevant)
{
    double sum = 0.0;
    for (auto const &rel : relevant) {
        for (std::size_t r = 0; r < ids.size(); ++r) {
            if (ids[r] != rel) {
                continue;
            }
            std::size_t hits = 0;
            for (std::size_t j = 0; j <= r; ++j) {
                hits += relevant.count(ids[j]);
            }
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
            break;
        }
    }
    return sum / static_cast<double>(relevant.size());
}

Ranking ranked(std::vector<std::string> const &ids)
{
    Ranking r;
    double s = static_cast<double>(ids.size());
    for (auto const &id : ids) {
        r.push_back({id, s--});
    }
    return r;
}

double batch_loss(QNetworkParams const &params, std::vector<TrainingExample> const &batch)
{
    double sum = 0.0;
    for (auto const &ex : batch) {
        double e = ex.target - qnet_forward(params, ex.q1, ex.q2)[action_index(ex.action)];
        sum += e * e;
    }
    return sum / static_cast<double>(batch.size());
}

double student_t_density(double x, double nu)
{
    double c = std::tgamma((nu + 1.0) / 2.0) / (std::sqrt(nu * M_PI) * std::tgamma(nu / 2.0));
    return c * std::pow(1.0 + x * x / nu, -(nu + 1.0) / 2.0);
}

double quadrature_p(double t, double nu)
{
    int const n = 200000;
    double h = std::abs(t) / n;
    double acc = student_t_density(0.0, nu) + student_t_density(std::abs(t), nu);
    for (int i = 1; i < n; ++i) {
        acc += (i % 2 ? 4.0 : 2.0) * student_t_density(i * h, nu);
    }
    return 1.0 - 2.0 * acc * h / 3.0;
}

std::string read_bytes(fs::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run(std::string const &cmd)
{
    return std::system((cmd + " > /dev/null 2>&1").c_str());
}

}  // namespace

int main()
{
    std::printf("acceptance: %s\n", SAYT_DATA_DIR);

    criterion(1, "SET effort equals TS", 5.0, [] {
        Outcome out;
        auto mini = load_mini();
        auto best = compute_best_maps(mini.queries, mini.retriever, mini.qrels);
        auto set = evaluate(StaticPolicy(PolicyKind::set), mini, best);
        out.require(set.effort == set.ts_mean, "mini: effort != ts_mean");
        for (auto const &r : set.records) {
            out.require(r.ts == r.n_q, "mini: ts != n_q for " + r.query_id);
        }
        SynthSpec spec;
        spec.seed = 99;
        spec.n_docs = 80;
        spec.n_queries = 40;
        auto synth = generate(spec);
        auto ret = make_bm25_retriever(build_index(synth.documents));
        auto sbest = compute_best_maps(synth.queries, ret, synth.qrels);
        auto srep = run_evaluation(StaticPolicy(PolicyKind::set), synth.queries, ret, synth.qrels, sbest);
        out.require(srep.effort == srep.ts_mean, "synthetic: effort != ts_mean");
        for (auto const &r : srep.records) {
            out.require(r.ts == r.n_q, "synthetic: ts != n_q for " + r.query_id);
        }
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("effort = ts = %.4f", set.effort);
        return out;
    });

    criterion(2, "SLT issues one search per query", 5.0, [] {
        Outcome out;
        auto mini = load_mini();
        auto best = compute_best_maps(mini.queries, mini.retriever, mini.qrels);
        auto set = evaluate(StaticPolicy(PolicyKind::set), mini, best);
        auto slt = evaluate(StaticPolicy(PolicyKind::slt), mini, best);
        for (std::size_t i = 0; i < slt.records.size(); ++i) {
            out.require(slt.records[i].ts == 1, "ts != 1 for " + slt.records[i].query_id);
            out.require(slt.records[i].n_q >= set.records[i].n_q, "n_q below SET for " + slt.records[i].query_id);
        }
        out.require(slt.ts_mean == 1.0, "ts_mean != 1");
        out.require(slt.effort >= set.effort, "effort below SET");
        return out;
    });

    criterion(3, "every policy needs at least SET's effort; SS with no stop-words equals SET", 10.0, [] {
        Outcome out;
        auto mini = load_mini();
        auto best = compute_best_maps(mini.queries, mini.retriever, mini.qrels);
        auto set = evaluate(StaticPolicy(PolicyKind::set), mini, best);

        TrainConfig cfg;
        cfg.dims = {static_cast<Eigen::Index>(mini.table->dim()), 16, 8};
        cfg.episodes = 60;
        cfg.seed = 3;
        auto trained = train(cfg, mini.queries, mini.retriever, mini.qrels, mini.table);

        std::vector<std::unique_ptr<TriggerPolicy>> policies;
        policies.push_back(std::make_unique<StaticPolicy>(PolicyKind::slt));
        policies.push_back(std::make_unique<StaticPolicy>(PolicyKind::ss, default_stopwords()));
        policies.push_back(std::make_unique<SimilarityPolicy>(mini.table));
        policies.push_back(std::make_unique<DqnPolicy>(std::make_shared<QNetworkParams const>(trained.params)));
        for (auto const &p : policies) {
            auto rep = evaluate(*p, mini, best);
            for (std::size_t i = 0; i < rep.records.size(); ++i) {
                out.require(rep.records[i].n_q >= set.records[i].n_q,
                            p->name() + ": n_q below SET for " + rep.records[i].query_id);
            }
        }
        auto ss_empty = evaluate(StaticPolicy(PolicyKind::ss, StopwordList{}), mini, best);
        // Only the policy label may differ.
        ss_empty.policy = set.policy;
        out.require(report_json(ss_empty) == report_json(set), "SS(empty) report differs from SET");
        return out;
    });

    criterion(4, "reward function table", 0.0, [] {
        Outcome out;
        int cases = 0;
        for (double r_th : {0.0, 0.0001}) {
            for (double delta : {-1.0, -0.001, 0.0, r_th, r_th + 0.001, 1.0}) {
                for (auto a : {Action::wait, Action::search}) {
                    double want = a == Action::wait ? 0.0 : (delta >= r_th ? 1.0 + delta : -1.0);
                    out.require(reward_of(a, delta, r_th) == want, "mismatch");
                    ++cases;
                }
            }
        }
        out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(cases) + " cases";
        return out;
    });

    criterion(5, "Q-network gradients match finite differences", 30.0, [] {
        Outcome out;
        QNetworkDims dims{3, 4, 3};
        double worst = 0.0;
        for (std::uint64_t seed : {11, 12, 13, 14, 15}) {
            std::mt19937_64 rng(seed);
            auto table = std::make_shared<EmbeddingTable>(3);
            for (auto const *w : {"a", "b", "c", "d"}) {
                Vector v(3);
                for (int i = 0; i < 3; ++i) {
                    v[i] = uniform(rng, -1.0, 1.0);
                }
                table->set(w, v);
            }
            auto params = make_qnetwork(table, dims, rng);
            for (auto *bias : {&params.weights.b1, &params.weights.lstm_fwd.b, &params.weights.lstm_bwd.b}) {
                for (Eigen::Index i = 0; i < bias->size(); ++i) {
                    (*bias)[i] = uniform(rng, -0.5, 0.5);
                }
            }
            std::vector<TrainingExample> batch{
                {{"a", "b"}, {"c"}, Action::search, 1.3},
                {{}, {"d", "a", "zzz"}, Action::wait, -0.4},
                {{"c"}, {}, Action::search, 0.2},
                {{"b", "d", "c"}, {"a", "b"}, Action::wait, 0.9},
            };
            auto grads = qnet_backward(params, batch);
            auto analytic = tensors(std::as_const(grads.grads));
            auto views = tensors(params.weights);
            for (std::size_t t = 0; t < views.size(); ++t) {
                for (std::size_t i = 0; i < views[t].values.size(); ++i) {
                    double &x = views[t].values[i];
                    double saved = x;
                    double const h = 1e-4;
                    auto at = [&](double off) {
                        x = saved + off;
                        return batch_loss(params, batch);
                    };
                    double numeric = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
                    x = saved;
                    double a = analytic[t].values[i];
                    double scale = std::abs(a) + std::abs(numeric);
                    double rel = scale < 1e-9 ? 0.0 : std::abs(a - numeric) / scale;
                    worst = std::max(worst, rel);
                    out.require(rel < 1e-4, std::string(views[t].name) + " entry " + std::to_string(i));
                }
            }
        }
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("max relative error %.2e", worst);
        return out;
    });

    criterion(6, "average precision matches a brute-force oracle", 0.0, [] {
        Outcome out;
        std::mt19937_64 rng(2024);
        double worst = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::size_t pool = 1 + rng() % 40;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < pool; ++i) {
                ids.push_back("d" + std::to_string(i));
            }
            std::shuffle(ids.begin(), ids.end(), rng);
            ids.resize(rng() % (pool + 1));
            std::set<std::string> relevant;
            std::size_t n_rel = 1 + rng() % pool;
            while (relevant.size() < n_rel) {
                relevant.insert("d" + std::to_string(rng() % (pool + 5)));
            }
            worst = std::max(worst, std::abs(average_precision(ranked(ids), relevant) - brute_force_ap(ids, relevant)));
        }
        out.require(worst <= 1e-12, fmt("fuzz error %.3e", worst));
        double fixture = average_precision(ranked({"d1", "x", "d2"}), {"d1", "d2"});
        out.require(std::abs(fixture - (1.0 + 2.0 / 3.0) / 2.0) <= 1e-12, "fixture 0.83333");
        out.require(average_precision(ranked({"d1", "d2"}), {"d1"}) == 1.0, "fixture 1.0");
        out.require(average_precision({}, {"d1"}) == 0.0, "fixture 0.0");
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("1000 pairs, max error %.1e", worst);
        return out;
    });

    // Criteria 7 and 8 share one training run.
    SynthSpec spec;
    spec.n_docs = 200;
    spec.n_queries = 150;
    spec.seed = 7;
    auto synth = generate(spec);
    std::vector<Query> train_q(synth.queries.begin(), synth.queries.begin() + 100);
    std::vector<Query> eval_q(synth.queries.begin() + 100, synth.queries.end());
    auto synth_table = std::make_shared<EmbeddingTable const>(synth.vectors);
    auto synth_ret = make_bm25_retriever(build_index(synth.documents));
    std::shared_ptr<QNetworkParams const> trained;

    criterion(7, "trained DQN trades searches for little effort", 300.0, [&] {
        Outcome out;
        TrainConfig cfg;
        cfg.eps_min = 0.05;
        cfg.r_th = 0.0001;
        cfg.episodes = 2000;
        cfg.seed = 42;
        cfg.dims = {static_cast<Eigen::Index>(spec.dim), 64, 32};
        auto result = train(cfg, train_q, synth_ret, synth.qrels, synth_table);
        trained = std::make_shared<QNetworkParams const>(result.params);
        double first = 0.0;
        double last = 0.0;
        for (std::size_t i = 0; i < 100; ++i) {
            first += result.log[i].total_reward / 100.0;
            last += result.log[result.log.size() - 1 - i].total_reward / 100.0;
        }
        auto best = compute_best_maps(eval_q, synth_ret, synth.qrels);
        auto set = run_evaluation(StaticPolicy(PolicyKind::set), eval_q, synth_ret, synth.qrels, best);
        auto dqn = run_evaluation(DqnPolicy(trained), eval_q, synth_ret, synth.qrels, best);
        auto row = compare(set, dqn);
        out.require(row.delta_ts_pct <= -30.0, "dTS above -30%");
        out.require(row.delta_effort_pct <= 5.0, "dEffort above +5%");
        out.require(last > first, "reward did not improve");
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("dTS %.2f%%", row.delta_ts_pct) +
                      fmt(", dEffort %+.2f%%", row.delta_effort_pct) + fmt(", reward first100 %.3f", first) +
                      fmt(" last100 %.3f", last);
        return out;
    });

    criterion(8, "DQN quality curve stays within 0.05 of SET from position 3", 0.0, [&] {
        Outcome out;
        if (!trained) {
            out.require(false, "no trained model");
            return out;
        }
        auto set = quality_curve(StaticPolicy(PolicyKind::set), eval_q, synth_ret, synth.qrels);
        auto dqn = quality_curve(DqnPolicy(trained), eval_q, synth_ret, synth.qrels);
        out.require(set.size() == dqn.size(), "curve lengths differ");
        double worst = 0.0;
        for (std::size_t i = 2; i < std::min(set.size(), dqn.size()); ++i) {
            double gap = std::abs(set[i].mean_map - dqn[i].mean_map);
            worst = std::max(worst, gap);
            out.require(gap <= 0.05, "position " + std::to_string(i + 1) + fmt(" gap %.4f", gap));
        }
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("max gap %.4f", worst);
        return out;
    });

    criterion(9, "paired t-test fixture", 0.0, [] {
        Outcome out;
        std::vector<double> a{1, 2, 3, 4};
        std::vector<double> b{0, 0, 0, 0};
        auto res = paired_t_test(a, b);
        double t_ref = 2.5 / (std::sqrt(5.0 / 3.0) / 2.0);
        double p_ref = quadrature_p(t_ref, 3.0);
        out.require(std::abs(res.t - 3.873) <= 1e-3, fmt("t %.6f", res.t));
        out.require(std::abs(res.p - 0.0305) <= 1e-3, fmt("p %.6f", res.p));
        out.require(std::abs(res.t - t_ref) <= 1e-3, "t vs reference");
        out.require(std::abs(res.p - p_ref) <= 1e-3, "p vs quadrature reference");
        auto same = paired_t_test(a, a);
        out.require(same.t == 0.0 && same.p == 1.0, "identical inputs");
        out.detail += (out.detail.empty() ? "" : "; ") + fmt("t %.4f", res.t) + fmt(" p %.4f", res.p);
        return out;
    });

    criterion(10, "end-to-end runs are byte-identical", 0.0, [] {
        Outcome out;
        std::string const cli = SAYT_CLI;
        auto root = fs::temp_directory_path() / ("sayt-accept-" + std::to_string(std::random_device{}()));
        fs::create_directories(root);
        std::vector<std::string> files{"ck.json", "ck.json.log.csv", "set/report.json", "dqn/report.json",
                                       "dqn/summary.csv", "dqn/curve.csv", "compare.csv"};
        std::vector<std::string> contents[2];
        for (int pass = 0; pass < 2; ++pass) {
            auto dir = root / std::to_string(pass);
            auto d = dir.string();
            std::vector<std::string> steps{
                cli + " generate --out " + d + "/data --n-docs 60 --n-queries 20 --dim 16 --seed 5",
                cli + " index --docs " + d + "/data/docs.jsonl --out " + d + "/index.bin",
                cli + " train --index " + d + "/index.bin --queries " + d + "/data/queries.tsv --qrels " + d +
                    "/data/qrels.txt --vectors " + d + "/data/vectors.txt --out " + d +
                    "/ck.json --episodes 80 --hidden 12 --proj 6 --seed 9 --r-th 0.0001",
                cli + " eval --policy set --index " + d + "/index.bin --queries " + d + "/data/queries.tsv --qrels " +
                    d + "/data/qrels.txt --out-dir " + d + "/set",
                cli + " eval --policy dqn --checkpoint " + d + "/ck.json --vectors " + d +
                    "/data/vectors.txt --index " + d + "/index.bin --queries " + d + "/data/queries.tsv --qrels " +
                    d + "/data/qrels.txt --out-dir " + d + "/dqn --baseline " + d + "/set/report.json --jobs 4",
                cli + " report " + d + "/set/report.json " + d + "/dqn/report.json --csv " + d + "/compare.csv",
            };
            for (auto const &step : steps) {
                if (run(step) != 0) {
                    out.require(false, "command failed: " + step);
                    return out;
                }
            }
            for (auto const &f : files) {
                contents[pass].push_back(read_bytes(dir / f));
            }
        }
        for (std::size_t i = 0; i < files.size(); ++i) {
            out.require(!contents[0][i].empty(), files[i] + " is empty");
            out.require(contents[0][i] == contents[1][i], files[i] + " differs");
        }
        fs::remove_all(root);
        out.detail += (out.detail.empty() ? "" : "; ") + std::to_string(files.size()) + " files compared";
        return out;
    });

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
    return failures == 0 ? 0 : 1;
}
