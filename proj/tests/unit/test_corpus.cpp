#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sayt/corpus.hpp"
#include "sayt/error.hpp"

using namespace sayt;
using testing::TempDir;
using testing::write_file;

TEST_CASE("tokenize examples")
{
    CHECK(tokenize("Flight service from New York") == Tokens{"flight", "service", "from", "new", "york"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("Barcelona,  Spain!") == Tokens{"barcelona", "spain"});
    CHECK(tokenize("  \t\n ").empty());
    CHECK(tokenize("... !!! ,") == Tokens{});
}

TEST_CASE("tokenize keeps inner punctuation and strips edges only")
{
    CHECK(tokenize("don't (stop) e-mail.") == Tokens{"don't", "stop", "e-mail"});
    CHECK(tokenize("\"quoted\"") == Tokens{"quoted"});
}

TEST_CASE("tokenize handles UTF-8")
{
    // Non-ASCII letters survive; Unicode punctuation and spaces are removed.
    CHECK(tokenize("\xC2\xBFQu\xC3\xA9?") == Tokens{"qu\xC3\xA9"});
    CHECK(tokenize("a\xC2\xA0" "b") == Tokens{"a", "b"});
    CHECK(tokenize("\xE2\x80\x9Chello\xE2\x80\x9D world\xE2\x80\xA6") == Tokens{"hello", "world"});
}

TEST_CASE("tokenize is idempotent on its joined output")
{
    std::mt19937_64 rng(3);
    std::string const alphabet = "abcXYZ ,.!?'-\t\"()";
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        auto len = rng() % 40;
        for (std::size_t i = 0; i < len; ++i) {
            text += alphabet[rng() % alphabet.size()];
        }
        auto once = tokenize(text);
        std::string joined;
        for (auto const &t : once) {
            CHECK_FALSE(t.empty());
            joined += (joined.empty() ? "" : " ") + t;
        }
        CHECK(tokenize(joined) == once);
    }
}

TEST_CASE("load_documents")
{
    TempDir dir;
    SUBCASE("single line")
    {
        write_file(dir / "d.jsonl", "{\"id\":\"d1\",\"text\":\"a b\"}\n");
        auto d = load_documents(dir / "d.jsonl");
        REQUIRE(d.size() == 1);
        CHECK(d[0].id == "d1");
        CHECK(d[0].tokens == Tokens{"a", "b"});
    }
    SUBCASE("duplicate id names the id")
    {
        write_file(dir / "d.jsonl", "{\"id\":\"d1\",\"text\":\"a\"}\n{\"id\":\"d1\",\"text\":\"b\"}\n");
        CHECK_THROWS_WITH_AS(load_documents(dir / "d.jsonl"), doctest::Contains("d1"), InputError);
    }
    SUBCASE("empty file")
    {
        write_file(dir / "d.jsonl", "");
        CHECK(load_documents(dir / "d.jsonl").empty());
    }
    SUBCASE("malformed line names the line number")
    {
        write_file(dir / "d.jsonl", "{\"id\":\"d1\",\"text\":\"a\"}\nnot json\n");
        CHECK_THROWS_WITH_AS(load_documents(dir / "d.jsonl"), doctest::Contains(":2"), FormatError);
        write_file(dir / "d.jsonl", "{\"id\":\"d1\"}\n");
        CHECK_THROWS_AS(load_documents(dir / "d.jsonl"), FormatError);
        write_file(dir / "d.jsonl", "{\"id\":3,\"text\":\"a\"}\n");
        CHECK_THROWS_AS(load_documents(dir / "d.jsonl"), FormatError);
    }
    SUBCASE("missing file")
    {
        CHECK_THROWS_AS(load_documents(dir / "nope.jsonl"), InputError);
    }
}

TEST_CASE("documents round-trip")
{
    TempDir dir;
    auto original = testing::docs({{"d1", "Hello, World!"}, {"d2", "tab\there \"quotes\" \xC3\xA9t\xC3\xA9"}, {"d3", ""}});
    write_documents(dir / "d.jsonl", original);
    CHECK(load_documents(dir / "d.jsonl") == original);
}

TEST_CASE("load_queries")
{
    TempDir dir;
    write_file(dir / "q.tsv", "q1\thow is weather today\n");
    auto q = load_queries(dir / "q.tsv");
    REQUIRE(q.size() == 1);
    CHECK(q[0].id == "q1");
    CHECK(q[0].tokens.size() == 4);
    CHECK(q[0].raw == "how is weather today");

    write_file(dir / "q.tsv", "q1\tfine\nq2 no tab here\n");
    CHECK_THROWS_WITH_AS(load_queries(dir / "q.tsv"), doctest::Contains(":2"), FormatError);

    write_file(dir / "q.tsv", "q2\t!!!\n");
    CHECK_THROWS_AS(load_queries(dir / "q.tsv"), InputError);

    write_file(dir / "q.tsv", "q1\ta\r\nq2\tb c\r\n");
    q = load_queries(dir / "q.tsv");
    REQUIRE(q.size() == 2);
    CHECK(q[1].tokens == Tokens{"b", "c"});
}

TEST_CASE("queries round-trip")
{
    TempDir dir;
    std::vector<Query> qs{testing::query("q1", "What is BM25?"), testing::query("q2", "the cat")};
    write_queries(dir / "q.tsv", qs);
    CHECK(load_queries(dir / "q.tsv") == qs);
}

TEST_CASE("load_qrels")
{
    TempDir dir;
    write_file(dir / "r", "q1 0 d1 1\n");
    CHECK(load_qrels(dir / "r") == Qrels{{"q1", {{"d1", 1}}}});
    write_file(dir / "r", "q1 0 d1 0\n");
    CHECK(load_qrels(dir / "r").empty());
    write_file(dir / "r", "q1 0 d1 x\n");
    CHECK_THROWS_WITH_AS(load_qrels(dir / "r"), doctest::Contains(":1"), FormatError);
    write_file(dir / "r", "q1 0 d1\n");
    CHECK_THROWS_AS(load_qrels(dir / "r"), FormatError);

    SUBCASE("last duplicate wins")
    {
        write_file(dir / "r", "q1 0 d1 1\nq1 0 d1 0\nq1 0 d2 2\nq1 0 d2 1\n");
        CHECK(load_qrels(dir / "r") == Qrels{{"q1", {{"d2", 1}}}});
        CHECK(relevant_set(load_qrels(dir / "r"), "q1") == std::set<std::string>{"d2"});
        CHECK(relevant_set(load_qrels(dir / "r"), "q9").empty());
    }
}

TEST_CASE("qrels round-trip")
{
    TempDir dir;
    Qrels qrels{{"q1", {{"d1", 1}, {"d3", 2}}}, {"q2", {{"d2", 1}}}};
    write_qrels(dir / "r", qrels);
    CHECK(load_qrels(dir / "r") == qrels);
}

TEST_CASE("stop-words")
{
    auto def = default_stopwords();
    CHECK(is_stopword(def, "the"));
    CHECK_FALSE(is_stopword(def, "barcelona"));
    CHECK_FALSE(is_stopword(StopwordList{}, "the"));
    CHECK(def.size() >= 100);
    for (auto const &w : def.sorted()) {
        CHECK(tokenize(w) == Tokens{w});
    }
}

TEST_CASE("bundled stop-word file matches the built-in list")
{
    auto file = load_stopwords(SAYT_DATA_DIR "/stopwords.txt");
    CHECK(file.sorted() == default_stopwords().sorted());
}

TEST_CASE("load_stopwords skips comments and blanks")
{
    TempDir dir;
    write_file(dir / "s", "# comment\n\nthe\nA\n  of  \n");
    auto list = load_stopwords(dir / "s");
    CHECK(list.size() == 3);
    CHECK(is_stopword(list, "a"));
    CHECK(is_stopword(list, "of"));
    CHECK(is_stopword(list, "the"));
}
