#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

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

namespace py = pybind11;
using namespace sayt;

namespace {

Action parse_action(std::string const &name)
{
    if (name == "SEARCH" || name == "search") {
        return Action::search;
    }
    if (name == "WAIT" || name == "wait") {
        return Action::wait;
    }
    throw InputError("unknown action '" + name + "' (expected WAIT or SEARCH)");
}

Ranking as_ranking(std::vector<std::string> const &ids)
{
    Ranking r;
    double score = static_cast<double>(ids.size());
    for (auto const &id : ids) {
        r.push_back({id, score--});
    }
    return r;
}

std::vector<std::pair<std::string, double>> as_pairs(Ranking const &ranking)
{
    std::vector<std::pair<std::string, double>> out;
    out.reserve(ranking.size());
    for (auto const &hit : ranking) {
        out.emplace_back(hit.id, hit.score);
    }
    return out;
}

std::shared_ptr<EmbeddingTable const> optional_table(std::optional<std::filesystem::path> const &vectors)
{
    if (!vectors) {
        return nullptr;
    }
    return std::make_shared<EmbeddingTable const>(load_word_vectors(*vectors));
}

std::unique_ptr<TriggerPolicy> policy_from(std::string const &name, std::shared_ptr<EmbeddingTable const> table,
                                           std::optional<std::filesystem::path> const &checkpoint,
                                           std::optional<std::vector<std::string>> const &stopwords,
                                           double threshold)
{
    PolicyConfig config;
    config.kind = parse_policy_kind(name);
    config.table = std::move(table);
    config.checkpoint = checkpoint;
    config.threshold = threshold;
    if (stopwords) {
        config.stopwords = StopwordList(std::unordered_set<std::string>(stopwords->begin(), stopwords->end()));
    }
    return make_policy(config);
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Selective search triggering for instant search";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);

    m.def("tokenize", [](std::string const &text) { return tokenize(text); }, py::arg("text"));
    m.def("default_stopwords", [] { return default_stopword_words(); });
    m.def(
        "average_precision",
        [](std::vector<std::string> const &ranking, std::set<std::string> const &relevant) {
            return average_precision(as_ranking(ranking), relevant);
        },
        py::arg("ranking"), py::arg("relevant"));
    m.def(
        "paired_t_test",
        [](std::vector<double> const &a, std::vector<double> const &b) {
            auto r = paired_t_test(a, b);
            return py::make_tuple(r.t, r.p);
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "reward_of",
        [](std::string const &action, double delta_map, double r_th) {
            return reward_of(parse_action(action), delta_map, r_th);
        },
        py::arg("action"), py::arg("delta_map"), py::arg("r_th") = 0.0);
    m.def(
        "cosine_distance", [](std::vector<double> const &u, std::vector<double> const &v) {
            if (u.size() != v.size()) {
                throw InputError("vectors differ in length");
            }
            return cosine_distance(Eigen::Map<Vector const>(u.data(), static_cast<Eigen::Index>(u.size())),
                                   Eigen::Map<Vector const>(v.data(), static_cast<Eigen::Index>(v.size())));
        },
        py::arg("u"), py::arg("v"));

    py::class_<Retriever>(m, "Retriever")
        .def_static(
            "bm25_from_documents",
            [](std::vector<std::pair<std::string, std::string>> const &docs, double k1, double b, std::size_t top_k) {
                std::vector<Document> collection;
                for (auto const &[id, text] : docs) {
                    collection.push_back({id, text, tokenize(text)});
                }
                return make_bm25_retriever(build_index(collection, {k1, b}), top_k);
            },
            py::arg("documents"), py::arg("k1") = 1.2, py::arg("b") = 0.75, py::arg("top_k") = default_top_k)
        .def_static(
            "bm25_from_index",
            [](std::filesystem::path const &path, std::size_t top_k) {
                return make_bm25_retriever(load_index(path), top_k);
            },
            py::arg("path"), py::arg("top_k") = default_top_k)
        .def_static(
            "embedding",
            [](std::filesystem::path const &docs, std::filesystem::path const &vectors, std::size_t top_k) {
                auto table = std::make_shared<EmbeddingTable const>(load_word_vectors(vectors));
                return make_dense_retriever(load_documents(docs), table, top_k);
            },
            py::arg("documents"), py::arg("vectors"), py::arg("top_k") = default_top_k)
        .def_property_readonly("num_docs", &Retriever::num_docs)
        .def_property_readonly("kind",
                               [](Retriever const &r) { return r.kind() == Retriever::Kind::bm25 ? "bm25" : "embedding"; })
        .def(
            "search",
            [](Retriever const &r, std::string const &query, std::optional<std::size_t> k) {
                auto tokens = tokenize(query);
                return as_pairs(k ? r.retrieve(tokens, *k) : r.retrieve(tokens));
            },
            py::arg("query"), py::arg("k") = py::none());

    m.def(
        "build_index",
        [](std::filesystem::path const &docs, std::filesystem::path const &out, double k1, double b) {
            auto index = build_index(load_documents(docs), {k1, b});
            save_index(index, out);
            return index.num_docs();
        },
        py::arg("documents"), py::arg("out"), py::arg("k1") = 1.2, py::arg("b") = 0.75);

    m.def(
        "generate_synthetic",
        [](std::filesystem::path const &out, std::size_t n_docs, std::size_t n_queries, std::size_t dim,
           std::uint64_t seed, std::size_t pad_min, std::size_t pad_max) {
            SynthSpec spec;
            spec.n_docs = n_docs;
            spec.n_queries = n_queries;
            spec.dim = dim;
            spec.seed = seed;
            spec.pad_min = pad_min;
            spec.pad_max = pad_max;
            write_synth(generate(spec), out);
        },
        py::arg("out"), py::arg("n_docs") = 200, py::arg("n_queries") = 50, py::arg("dim") = 50,
        py::arg("seed") = 7, py::arg("pad_min") = 1, py::arg("pad_max") = 5);

    m.def(
        "evaluate_json",
        [](std::string const &policy, Retriever const &retriever, std::filesystem::path const &queries,
           std::filesystem::path const &qrels, std::optional<std::filesystem::path> const &vectors,
           std::optional<std::filesystem::path> const &checkpoint,
           std::optional<std::vector<std::string>> const &stopwords, double threshold, std::size_t jobs) {
            auto table = optional_table(vectors);
            auto p = policy_from(policy, table, checkpoint, stopwords, threshold);
            auto qs = load_queries(queries);
            auto judgments = load_qrels(qrels);
            py::gil_scoped_release release;
            auto best = compute_best_maps(qs, retriever, judgments, jobs);
            auto report = run_evaluation(*p, qs, retriever, judgments, best, jobs);
            report.curve = quality_curve(*p, qs, retriever, judgments, jobs);
            return report_json(report);
        },
        py::arg("policy"), py::arg("retriever"), py::arg("queries"), py::arg("qrels"), py::arg("vectors") = py::none(),
        py::arg("checkpoint") = py::none(), py::arg("stopwords") = py::none(),
        py::arg("threshold") = default_similarity_threshold, py::arg("jobs") = 1);

    m.def(
        "compare_json",
        [](std::filesystem::path const &base, std::filesystem::path const &other) {
            auto row = compare(load_report_json(base), load_report_json(other));
            py::dict d;
            d["policy"] = row.policy;
            d["effort"] = row.effort;
            d["ts_mean"] = row.ts_mean;
            d["delta_effort_pct"] = row.delta_effort_pct;
            d["delta_ts_pct"] = row.delta_ts_pct;
            d["t"] = row.t;
            d["p"] = row.p;
            d["significant"] = row.significant;
            return d;
        },
        py::arg("base"), py::arg("other"));

    m.def(
        "train",
        [](Retriever const &retriever, std::filesystem::path const &queries, std::filesystem::path const &qrels,
           std::filesystem::path const &vectors, std::filesystem::path const &out, std::size_t episodes,
           std::uint64_t seed, double r_th, double eps_min, std::size_t hidden, std::size_t proj) {
            auto table = std::make_shared<EmbeddingTable const>(load_word_vectors(vectors));
            TrainConfig config;
            config.episodes = episodes;
            config.seed = seed;
            config.r_th = r_th;
            config.eps_min = eps_min;
            config.dims = {static_cast<Eigen::Index>(table->dim()), static_cast<Eigen::Index>(hidden),
                           static_cast<Eigen::Index>(proj)};
            auto qs = load_queries(queries);
            auto judgments = load_qrels(qrels);
            TrainResult result = [&] {
                py::gil_scoped_release release;
                return train(config, qs, retriever, judgments, table);
            }();
            save_checkpoint(result.params.weights, out);
            py::list log;
            for (auto const &e : result.log) {
                py::dict d;
                d["episode"] = e.episode;
                d["eps"] = e.eps;
                d["total_reward"] = e.total_reward;
                d["mean_loss"] = e.mean_loss;
                d["searches"] = e.searches;
                log.append(d);
            }
            return log;
        },
        py::arg("retriever"), py::arg("queries"), py::arg("qrels"), py::arg("vectors"), py::arg("out"),
        py::arg("episodes") = 1000, py::arg("seed") = 42, py::arg("r_th") = 0.0, py::arg("eps_min") = 0.7,
        py::arg("hidden") = 64, py::arg("proj") = 32);

    m.def(
        "simulate",
        [](std::string const &policy, Retriever const &retriever, std::string const &query,
           std::optional<std::set<std::string>> const &relevant, std::optional<std::filesystem::path> const &vectors,
           std::optional<std::filesystem::path> const &checkpoint,
           std::optional<std::vector<std::string>> const &stopwords, double threshold) {
            auto p = policy_from(policy, optional_table(vectors), checkpoint, stopwords, threshold);
            Query q{"query", query, tokenize(query)};
            if (q.tokens.empty()) {
                throw InputError("the query has no tokens");
            }
            auto rel = relevant.value_or(std::set<std::string>{});
            auto rec = simulate_session(*p, q, retriever, rel, BestMap{q.id, 2.0, q.tokens.size()}, false);
            py::list steps;
            for (auto const &s : rec.steps) {
                py::dict d;
                d["token"] = s.token;
                d["action"] = std::string(to_string(s.action));
                d["delta_map"] = s.action == Action::search && !rel.empty() ? py::cast(s.delta_map) : py::none();
                steps.append(d);
            }
            return steps;
        },
        py::arg("policy"), py::arg("retriever"), py::arg("query"), py::arg("relevant") = py::none(),
        py::arg("vectors") = py::none(), py::arg("checkpoint") = py::none(), py::arg("stopwords") = py::none(),
        py::arg("threshold") = default_similarity_threshold);
}
