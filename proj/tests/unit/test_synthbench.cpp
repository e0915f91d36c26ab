#include <doctest.h>

#include "helpers.hpp"
#include "sayt/error.hpp"
#include "sayt/evalharness.hpp"
#include "sayt/metrics.hpp"
#include "sayt/synthbench.hpp"

using namespace sayt;
using testing::TempDir;

namespace {

// Searches exactly at the salient keys.
class KeyOracle final : public TriggerPolicy {
   public:
    explicit KeyOracle(std::set<std::string> keys) : m_keys(std::move(keys)) {}
    [[nodiscard]] Action decide(SessionState const &, std::string const &token, bool) const override
    {
        return m_keys.count(token) != 0 ? Action::search : Action::wait;
    }
    [[nodiscard]] PolicyKind kind() const override { return PolicyKind::set; }
    [[nodiscard]] std::string name() const override { return "oracle"; }

   private:
    std::set<std::string> m_keys;
};

}  // namespace

TEST_CASE("generation is deterministic")
{
    SynthSpec spec;
    spec.n_docs = 10;
    spec.n_queries = 5;
    spec.seed = 7;
    TempDir a, b;
    write_synth(generate(spec), a.path());
    write_synth(generate(spec), b.path());
    for (auto const *name : {"docs.jsonl", "queries.tsv", "qrels.txt", "vectors.txt"}) {
        CHECK(testing::read_file(a / name) == testing::read_file(b / name));
        CHECK_FALSE(testing::read_file(a / name).empty());
    }
    spec.seed = 8;
    TempDir c;
    write_synth(generate(spec), c.path());
    CHECK(testing::read_file(a / "queries.tsv") != testing::read_file(c / "queries.tsv"));
}

TEST_CASE("generated files load back")
{
    SynthSpec spec;
    spec.n_docs = 30;
    spec.n_queries = 12;
    spec.dim = 6;
    auto corpus = generate(spec);
    TempDir dir;
    write_synth(corpus, dir.path());
    CHECK(load_documents(dir / "docs.jsonl") == corpus.documents);
    CHECK(load_queries(dir / "queries.tsv") == corpus.queries);
    CHECK(load_qrels(dir / "qrels.txt") == corpus.qrels);
    auto vectors = load_word_vectors(dir / "vectors.txt");
    CHECK(vectors.dim() == 6);
    CHECK(vectors.tokens() == corpus.vectors.tokens());
}

TEST_CASE("corpus structure")
{
    SynthSpec spec;
    spec.n_docs = 40;
    spec.n_queries = 30;
    auto corpus = generate(spec);
    REQUIRE(corpus.documents.size() == 40);
    REQUIRE(corpus.queries.size() == 30);
    CHECK(corpus.keys.size() == 40);

    for (auto const &doc : corpus.documents) {
        std::size_t keys = 0;
        for (auto const &t : doc.tokens) {
            keys += corpus.keys.count(t);
        }
        CHECK(keys == 1);
    }
    auto stop = default_stopwords();
    for (auto const &q : corpus.queries) {
        std::size_t keys = 0;
        std::size_t pads = 0;
        for (auto const &t : q.tokens) {
            keys += corpus.keys.count(t);
            pads += is_stopword(stop, t) ? 1 : 0;
        }
        CHECK(keys >= 1);
        CHECK(keys <= 2);
        CHECK(pads >= spec.pad_min);
        CHECK(pads <= spec.pad_max);
        CHECK(keys + pads == q.tokens.size());
        CHECK(relevant_set(corpus.qrels, q.id).size() == keys);
    }
    for (auto const &tok : corpus.vectors.tokens()) {
        CHECK(corpus.vectors.find(tok)->norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("every query reaches MAP 1 and the key oracle attains it")
{
    SynthSpec spec;
    spec.n_docs = 60;
    spec.n_queries = 40;
    auto corpus = generate(spec);
    Retriever r(std::make_shared<Bm25Index const>(build_index(corpus.documents)));
    auto best = compute_best_maps(corpus.queries, r, corpus.qrels);
    for (auto const &[id, b] : best) {
        CHECK(b.map_best == 1.0);
    }

    KeyOracle oracle(corpus.keys);
    auto oracle_report = run_evaluation(oracle, corpus.queries, r, corpus.qrels, best);
    auto set_report = run_evaluation(StaticPolicy(PolicyKind::set), corpus.queries, r, corpus.qrels, best);
    for (std::size_t i = 0; i < oracle_report.records.size(); ++i) {
        auto const &rec = oracle_report.records[i];
        CHECK(rec.reached_best);
        CHECK(rec.n_q == set_report.records[i].n_q);
    }
    CHECK(oracle_report.ts_mean < set_report.ts_mean);
}

TEST_CASE("spec validation")
{
    auto bad = [](auto mutate) {
        SynthSpec s;
        mutate(s);
        CHECK_THROWS_AS(generate(s), InputError);
    };
    bad([](SynthSpec &s) { s.n_docs = 0; });
    bad([](SynthSpec &s) { s.n_queries = 0; });
    bad([](SynthSpec &s) { s.pad_min = 4; s.pad_max = 2; });
    bad([](SynthSpec &s) { s.dim = 0; });
    bad([](SynthSpec &s) { s.salient_vocab_size = 0; });
    bad([](SynthSpec &s) { s.stopword_pool = 10000; });
}
