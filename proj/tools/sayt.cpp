// sayt: selective search triggering for instant search.
//
// Exit codes: 0 success, 1 internal error, 2 usage or input error,
// 3 refusing to overwrite existing output (pass --force).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sayt/corpus.hpp"
#include "sayt/embeddings.hpp"
#include "sayt/error.hpp"
#include "sayt/evalharness.hpp"
#include "sayt/metrics.hpp"
#include "sayt/neural.hpp"
#include "sayt/retrieval.hpp"
#include "sayt/rl.hpp"
#include "sayt/synthbench.hpp"
#include "sayt/workflow.hpp"

namespace fs = std::filesystem;
using namespace sayt;

namespace {

class OverwriteError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

void guard_output(fs::path const &path, bool force)
{
    if (!force && fs::exists(path)) {
        throw OverwriteError(path.string() + " already exists (use --force to overwrite)");
    }
}

void write_text(fs::path const &path, std::string const &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << text;
}

struct RetrieverArgs {
    std::string kind = "bm25";
    std::string index;
    std::string docs;
    std::string doc_vectors;
    std::size_t top_k = default_top_k;

    void add_to(CLI::App *cmd)
    {
        cmd->add_option("--retriever", kind, "Search engine: bm25 or embedding")
            ->check(CLI::IsMember({"bm25", "embedding"}))
            ->capture_default_str();
        cmd->add_option("--index", index, "BM25 index file (bm25 retriever)");
        cmd->add_option("--docs", docs, "Documents JSONL (embedding retriever)");
        cmd->add_option("--doc-vectors", doc_vectors, "Precomputed document vectors JSONL (embedding retriever)");
        cmd->add_option("--top-k", top_k, "Results per search")->check(CLI::PositiveNumber)->capture_default_str();
    }

    [[nodiscard]] Retriever open(std::shared_ptr<EmbeddingTable const> const &table) const
    {
        if (kind == "bm25") {
            if (index.empty()) {
                throw InputError("the bm25 retriever needs --index");
            }
            return make_bm25_retriever(load_index(index), top_k);
        }
        if (!table) {
            throw InputError("the embedding retriever needs --vectors");
        }
        if (!doc_vectors.empty()) {
            return make_dense_retriever(load_doc_vectors(doc_vectors), table, top_k);
        }
        if (docs.empty()) {
            throw InputError("the embedding retriever needs --docs or --doc-vectors");
        }
        return make_dense_retriever(load_documents(docs), table, top_k);
    }
};

struct PolicyArgs {
    std::string policy = "set";
    std::string stopwords;
    std::string vectors;
    std::string checkpoint;
    double threshold = default_similarity_threshold;

    void add_to(CLI::App *cmd)
    {
        cmd->add_option("--policy", policy, "Trigger policy: set, slt, ss, sm or dqn")
            ->check(CLI::IsMember({"set", "slt", "ss", "sm", "dqn"}))
            ->capture_default_str();
        cmd->add_option("--stopwords", stopwords, "Stop-word list for ss (default: built-in list)");
        cmd->add_option("--vectors", vectors, "Word vectors (sm, dqn, embedding retriever)");
        cmd->add_option("--checkpoint", checkpoint, "Trained Q-network (dqn)");
        cmd->add_option("--threshold", threshold, "Cosine-distance threshold for sm")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    }

    [[nodiscard]] std::shared_ptr<EmbeddingTable const> table() const
    {
        if (vectors.empty()) {
            return nullptr;
        }
        std::vector<std::string> warnings;
        auto t = std::make_shared<EmbeddingTable const>(load_word_vectors(vectors, &warnings));
        for (auto const &w : warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        return t;
    }

    [[nodiscard]] std::unique_ptr<TriggerPolicy> make(std::shared_ptr<EmbeddingTable const> table) const
    {
        PolicyConfig config;
        config.kind = parse_policy_kind(policy);
        if (!stopwords.empty()) {
            config.stopwords = load_stopwords(stopwords);
        }
        config.threshold = threshold;
        if (!checkpoint.empty()) {
            config.checkpoint = checkpoint;
        }
        config.table = std::move(table);
        return make_policy(config);
    }
};

/// "START:END" over the query file order, END exclusive; empty means all.
std::vector<Query> select_range(std::vector<Query> queries, std::string const &range)
{
    if (range.empty()) {
        return queries;
    }
    auto colon = range.find(':');
    if (colon == std::string::npos) {
        throw InputError("--range expects START:END");
    }
    std::size_t begin = 0;
    std::size_t end = queries.size();
    try {
        if (colon > 0) {
            begin = std::stoul(range.substr(0, colon));
        }
        if (colon + 1 < range.size()) {
            end = std::stoul(range.substr(colon + 1));
        }
    } catch (std::exception const &) {
        throw InputError("--range expects START:END");
    }
    end = std::min(end, queries.size());
    if (begin >= end) {
        throw InputError("--range selects no queries");
    }
    return {queries.begin() + static_cast<std::ptrdiff_t>(begin), queries.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::string format_delta(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.4f", x);
    return buf;
}

}  // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Selective search triggering for instant search"};
    app.set_config("--config", "", "key=value config file; command-line flags take precedence");
    app.require_subcommand(1);

    // generate
    SynthSpec synth;
    std::string synth_out;
    bool synth_force = false;
    auto *gen = app.add_subcommand("generate", "Write a synthetic saliency corpus");
    gen->add_option("--out", synth_out, "Output directory")->required();
    gen->add_option("--n-docs", synth.n_docs)->capture_default_str();
    gen->add_option("--n-queries", synth.n_queries)->capture_default_str();
    gen->add_option("--pad-min", synth.pad_min, "Minimum stop-words per query")->capture_default_str();
    gen->add_option("--pad-max", synth.pad_max, "Maximum stop-words per query")->capture_default_str();
    gen->add_option("--salient-vocab", synth.salient_vocab_size)->capture_default_str();
    gen->add_option("--stopword-pool", synth.stopword_pool)->capture_default_str();
    gen->add_option("--dim", synth.dim, "Word-vector dimension")->capture_default_str();
    gen->add_option("--seed", synth.seed)->capture_default_str();
    gen->add_flag("--force", synth_force, "Overwrite existing files");

    // index
    std::string index_docs;
    std::string index_out;
    std::string index_stats;
    Bm25Params bm25;
    bool index_force = false;
    auto *idx = app.add_subcommand("index", "Build a BM25 index");
    idx->add_option("--docs", index_docs, "Documents JSONL")->required();
    idx->add_option("--out", index_out, "Index file")->required();
    idx->add_option("--stats", index_stats, "Build statistics JSON (default: <out>.stats.json)");
    idx->add_option("--k1", bm25.k1)->check(CLI::PositiveNumber)->capture_default_str();
    idx->add_option("--b", bm25.b)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    idx->add_flag("--force", index_force, "Overwrite existing files");

    // train
    TrainConfig tc;
    RetrieverArgs train_ret;
    std::string train_queries, train_qrels, train_vectors, train_out, train_log, train_range;
    bool train_force = false;
    auto *tr = app.add_subcommand("train", "Train the DQN trigger policy");
    train_ret.add_to(tr);
    tr->add_option("--queries", train_queries, "Queries TSV")->required();
    tr->add_option("--qrels", train_qrels, "TREC qrels")->required();
    tr->add_option("--vectors", train_vectors, "Word vectors")->required();
    tr->add_option("--out", train_out, "Checkpoint file")->required();
    tr->add_option("--log", train_log, "Training log CSV (default: <out>.log.csv)");
    tr->add_option("--range", train_range, "Use queries START:END of the file");
    tr->add_option("--episodes", tc.episodes)->capture_default_str();
    tr->add_option("--gamma", tc.gamma, "Discount for future reward")->capture_default_str();
    tr->add_option("--eps", tc.eps_start, "Initial exploration rate")->capture_default_str();
    tr->add_option("--eps-decay", tc.eps_decay, "Per-episode exploration decay")->capture_default_str();
    tr->add_option("--eps-min", tc.eps_min, "Exploration floor")->capture_default_str();
    tr->add_option("--alpha", tc.alpha, "Adam learning rate")->capture_default_str();
    tr->add_option("--batch", tc.batch)->capture_default_str();
    tr->add_option("--r-th", tc.r_th, "Reward threshold on the MAP change")->capture_default_str();
    tr->add_option("--replay", tc.replay_capacity, "Replay buffer capacity")->capture_default_str();
    tr->add_option("--sync", tc.target_sync_interval, "Updates between target-network syncs")->capture_default_str();
    tr->add_option("--hidden", tc.dims.hidden, "LSTM hidden size")->check(CLI::PositiveNumber)->capture_default_str();
    tr->add_option("--proj", tc.dims.proj, "Dense layer size")->check(CLI::PositiveNumber)->capture_default_str();
    tr->add_option("--seed", tc.seed)->capture_default_str();
    tr->add_flag("--force", train_force, "Overwrite existing files");

    // eval
    PolicyArgs eval_pol;
    RetrieverArgs eval_ret;
    std::string eval_queries, eval_qrels, eval_out, eval_range, eval_baseline;
    std::size_t eval_jobs = 1;
    bool eval_svg = false;
    bool eval_force = false;
    auto *ev = app.add_subcommand("eval", "Evaluate a policy: Effort, TS and the quality curve");
    eval_pol.add_to(ev);
    eval_ret.add_to(ev);
    ev->add_option("--queries", eval_queries, "Queries TSV")->required();
    ev->add_option("--qrels", eval_qrels, "TREC qrels")->required();
    ev->add_option("--out-dir", eval_out, "Output directory")->required();
    ev->add_option("--range", eval_range, "Use queries START:END of the file");
    ev->add_option("--baseline", eval_baseline, "Baseline report.json for the summary deltas");
    ev->add_option("--jobs", eval_jobs, "Parallel sessions")->check(CLI::PositiveNumber)->capture_default_str();
    ev->add_flag("--svg", eval_svg, "Also write curve.svg");
    ev->add_flag("--force", eval_force, "Overwrite existing files");

    // simulate
    PolicyArgs sim_pol;
    RetrieverArgs sim_ret;
    std::string sim_query, sim_qid, sim_qrels;
    bool sim_json = false;
    auto *sim = app.add_subcommand("simulate", "Trace the policy's decision at every token of one query");
    sim_pol.add_to(sim);
    sim_ret.add_to(sim);
    sim->add_option("query", sim_query, "Query text")->required();
    sim->add_option("--qrels", sim_qrels, "TREC qrels, for MAP annotations");
    sim->add_option("--qid", sim_qid, "Query id to look up in --qrels");
    sim->add_flag("--json", sim_json, "Print a JSON array instead of text");

    // report
    std::vector<std::string> report_paths;
    std::string report_csv;
    auto *rep = app.add_subcommand("report", "Compare reports against the first (baseline) one");
    rep->add_option("reports", report_paths, "report.json files; the first is the baseline")->required()->expected(2, -1);
    rep->add_option("--csv", report_csv, "Also write the comparison as CSV");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const &e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    fs::path partial;
    try {
        if (*gen) {
            for (auto const *name : {"docs.jsonl", "queries.tsv", "qrels.txt", "vectors.txt"}) {
                guard_output(fs::path(synth_out) / name, synth_force);
            }
            auto corpus = generate(synth);
            write_synth(corpus, synth_out);
            std::cout << "wrote " << corpus.documents.size() << " documents and " << corpus.queries.size()
                      << " queries to " << synth_out << '\n';
        } else if (*idx) {
            fs::path stats_path = index_stats.empty() ? fs::path(index_out + ".stats.json") : fs::path(index_stats);
            guard_output(index_out, index_force);
            guard_output(stats_path, index_force);
            auto index = build_index(load_documents(index_docs), bm25);
            save_index(index, index_out);
            nlohmann::ordered_json stats;
            stats["N"] = index.num_docs();
            stats["avgdl"] = index.avgdl;
            stats["vocabulary"] = index.postings.size();
            stats["k1"] = index.params.k1;
            stats["b"] = index.params.b;
            write_text(stats_path, stats.dump(2) + "\n");
            std::cout << "indexed " << index.num_docs() << " documents, " << index.postings.size() << " terms\n";
        } else if (*tr) {
            fs::path log_path = train_log.empty() ? fs::path(train_out + ".log.csv") : fs::path(train_log);
            guard_output(train_out, train_force);
            guard_output(log_path, train_force);
            std::vector<std::string> warnings;
            auto table = std::make_shared<EmbeddingTable const>(load_word_vectors(train_vectors, &warnings));
            for (auto const &w : warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            tc.dims.d = static_cast<Eigen::Index>(table->dim());
            auto retriever = train_ret.open(table);
            auto queries = select_range(load_queries(train_queries), train_range);
            auto qrels = load_qrels(train_qrels);
            auto result = train(tc, queries, retriever, qrels, table);
            partial = fs::path(train_out + ".partial");
            save_checkpoint(result.params.weights, partial);
            write_train_log(log_path, result.log);
            fs::rename(partial, train_out);
            partial.clear();
            std::cout << "trained " << tc.episodes << " episodes (" << result.updates << " updates), final eps "
                      << result.final_eps << '\n';
        } else if (*ev) {
            fs::path dir(eval_out);
            for (auto const *name : {"report.json", "summary.csv", "curve.csv", "curve.svg"}) {
                guard_output(dir / name, eval_force);
            }
            auto table = eval_pol.table();
            auto policy = eval_pol.make(table);
            auto retriever = eval_ret.open(table);
            auto queries = select_range(load_queries(eval_queries), eval_range);
            auto qrels = load_qrels(eval_qrels);
            auto best = compute_best_maps(queries, retriever, qrels, eval_jobs);
            auto report = run_evaluation(*policy, queries, retriever, qrels, best, eval_jobs);
            report.curve = quality_curve(*policy, queries, retriever, qrels, eval_jobs);
            fs::create_directories(dir);
            write_report_json(dir / "report.json", report);
            auto row = eval_baseline.empty() ? compare(report, report) : compare(load_report_json(eval_baseline), report);
            std::ostringstream summary;
            write_summary_csv(summary, {row});
            write_text(dir / "summary.csv", summary.str());
            std::ostringstream curve;
            write_curve_csv(curve, report.curve);
            write_text(dir / "curve.csv", curve.str());
            if (eval_svg) {
                write_text(dir / "curve.svg", render_curves_svg({{report.policy, report.curve}}));
            }
            write_comparison_table(std::cout, {row});
        } else if (*sim) {
            auto table = sim_pol.table();
            auto policy = sim_pol.make(table);
            auto retriever = sim_ret.open(table);
            Query query{sim_qid.empty() ? "query" : sim_qid, sim_query, tokenize(sim_query)};
            if (query.tokens.empty()) {
                throw InputError("the query has no tokens");
            }
            std::set<std::string> relevant;
            if (!sim_qrels.empty()) {
                if (sim_qid.empty()) {
                    throw InputError("--qrels needs --qid to select the judgments");
                }
                relevant = relevant_set(load_qrels(sim_qrels), sim_qid);
                if (relevant.empty()) {
                    throw InputError("no relevance judgments for query " + sim_qid);
                }
            }
            BestMap never{query.id, 2.0, query.tokens.size()};
            auto rec = simulate_session(*policy, query, retriever, relevant, never, false);
            if (sim_json) {
                auto arr = nlohmann::ordered_json::array();
                for (auto const &s : rec.steps) {
                    nlohmann::ordered_json item;
                    item["token"] = s.token;
                    item["action"] = std::string(to_string(s.action));
                    if (s.action == Action::search && !relevant.empty()) {
                        item["delta_map"] = s.delta_map;
                    } else {
                        item["delta_map"] = nullptr;
                    }
                    arr.push_back(std::move(item));
                }
                std::cout << arr.dump(2) << '\n';
            } else {
                for (auto const &s : rec.steps) {
                    std::string delta;
                    if (s.action == Action::search) {
                        delta = relevant.empty() ? "n/a" : format_delta(s.delta_map);
                    }
                    char line[256];
                    std::snprintf(line, sizeof line, "%-20s %-6s %s", s.token.c_str(),
                                  std::string(to_string(s.action)).c_str(), delta.c_str());
                    std::string text(line);
                    while (!text.empty() && text.back() == ' ') {
                        text.pop_back();
                    }
                    std::cout << text << '\n';
                }
            }
        } else if (*rep) {
            std::vector<Report> reports;
            for (auto const &p : report_paths) {
                reports.push_back(load_report_json(p));
            }
            std::vector<ComparisonRow> rows;
            for (std::size_t i = 1; i < reports.size(); ++i) {
                rows.push_back(compare(reports.front(), reports[i]));
            }
            write_comparison_table(std::cout, rows);
            if (!report_csv.empty()) {
                std::ostringstream csv;
                write_summary_csv(csv, rows);
                write_text(report_csv, csv.str());
            }
        }
    } catch (OverwriteError const &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (InputError const &e) {
        if (!partial.empty()) {
            fs::remove(partial);
        }
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (std::exception const &e) {
        if (!partial.empty()) {
            std::error_code ec;
            fs::remove(partial, ec);
        }
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
