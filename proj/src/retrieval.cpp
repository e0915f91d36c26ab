#include "sayt/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

#include "sayt/error.hpp"

namespace sayt {

namespace {

constexpr char kMagic[5] = {'I', 'S', 'T', 'L', '1'};
constexpr std::uint32_t kLayoutVersion = 1;
constexpr char kTrailer[4] = {'E', 'N', 'D', '!'};

class Writer {
   public:
    explicit Writer(std::ofstream &out) : m_out(out) {}

    template <typename T>
    void pod(T value)
    {
        m_out.write(reinterpret_cast<char const *>(&value), sizeof(T));
    }
    void str(std::string const &s)
    {
        pod<std::uint64_t>(s.size());
        m_out.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void raw(char const *data, std::size_t n) { m_out.write(data, static_cast<std::streamsize>(n)); }

   private:
    std::ofstream &m_out;
};

class Reader {
   public:
    Reader(std::vector<char> bytes, std::string path) : m_bytes(std::move(bytes)), m_path(std::move(path)) {}

    template <typename T>
    T pod()
    {
        need(sizeof(T));
        T value;
        std::memcpy(&value, m_bytes.data() + m_pos, sizeof(T));
        m_pos += sizeof(T);
        return value;
    }
    std::string str()
    {
        auto n = pod<std::uint64_t>();
        need(n);
        std::string s(m_bytes.data() + m_pos, n);
        m_pos += n;
        return s;
    }
    bool match(char const *expected, std::size_t n)
    {
        need(n);
        bool ok = std::memcmp(m_bytes.data() + m_pos, expected, n) == 0;
        m_pos += n;
        return ok;
    }
    [[nodiscard]] bool at_end() const { return m_pos == m_bytes.size(); }
    [[noreturn]] void corrupt(std::string const &what) const
    {
        throw FormatError(m_path + ": corrupt index (" + what + ")");
    }

   private:
    void need(std::size_t n) const
    {
        if (n > m_bytes.size() - m_pos) {
            corrupt("unexpected end of file");
        }
    }

    std::vector<char> m_bytes;
    std::size_t m_pos = 0;
    std::string m_path;
};

bool ranks_before(ScoredDoc const &a, ScoredDoc const &b)
{
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.id < b.id;
}

Ranking top_k_of(Ranking candidates, std::size_t k)
{
    if (candidates.size() > k) {
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                          candidates.end(), ranks_before);
        candidates.resize(k);
    } else {
        std::sort(candidates.begin(), candidates.end(), ranks_before);
    }
    return candidates;
}

double term_weight(Bm25Index const &index, double idf, std::uint32_t tf, std::uint32_t doc)
{
    double const k1 = index.params.k1;
    double const b = index.params.b;
    double dl = index.doc_lengths[doc];
    double norm = index.avgdl > 0.0 ? dl / index.avgdl : 0.0;
    return idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
}

}  // namespace

double Bm25Index::idf(std::string const &term) const
{
    auto it = df.find(term);
    double n = static_cast<double>(num_docs());
    double d = it == df.end() ? 0.0 : it->second;
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

Bm25Index build_index(std::vector<Document> const &docs, Bm25Params params)
{
    if (docs.empty()) {
        throw InputError("cannot build an index over an empty collection");
    }
    if (!(params.k1 > 0.0) || params.b < 0.0 || params.b > 1.0) {
        throw InputError("BM25 parameters require k1 > 0 and 0 <= b <= 1");
    }
    Bm25Index index;
    index.params = params;
    index.doc_ids.reserve(docs.size());
    index.doc_lengths.reserve(docs.size());
    std::uint64_t total = 0;
    for (std::uint32_t ord = 0; ord < docs.size(); ++ord) {
        auto const &doc = docs[ord];
        index.doc_ids.push_back(doc.id);
        index.doc_lengths.push_back(static_cast<std::uint32_t>(doc.tokens.size()));
        total += doc.tokens.size();
        std::map<std::string, std::uint32_t> tf;
        for (auto const &tok : doc.tokens) {
            ++tf[tok];
        }
        for (auto const &[term, count] : tf) {
            index.postings[term].push_back({ord, count});
        }
    }
    for (auto const &[term, list] : index.postings) {
        index.df[term] = static_cast<std::uint32_t>(list.size());
    }
    index.avgdl = static_cast<double>(total) / static_cast<double>(docs.size());
    return index;
}

double bm25_score(Bm25Index const &index, Tokens const &query, std::uint32_t doc)
{
    if (doc >= index.num_docs()) {
        throw InputError("document ordinal out of range");
    }
    double score = 0.0;
    for (auto const &term : query) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) {
            continue;
        }
        auto const &list = it->second;
        auto pos = std::lower_bound(list.begin(), list.end(), doc,
                                    [](Posting const &p, std::uint32_t d) { return p.doc < d; });
        if (pos != list.end() && pos->doc == doc) {
            score += term_weight(index, index.idf(term), pos->tf, doc);
        }
    }
    return score;
}

void save_index(Bm25Index const &index, std::filesystem::path const &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    Writer w(out);
    w.raw(kMagic, sizeof kMagic);
    w.pod(kLayoutVersion);
    w.pod(index.params.k1);
    w.pod(index.params.b);
    w.pod(index.avgdl);
    w.pod<std::uint64_t>(index.num_docs());
    for (auto const &id : index.doc_ids) {
        w.str(id);
    }
    for (auto len : index.doc_lengths) {
        w.pod(len);
    }
    w.pod<std::uint64_t>(index.postings.size());
    for (auto const &[term, list] : index.postings) {
        w.str(term);
        w.pod<std::uint64_t>(list.size());
        for (auto const &p : list) {
            w.pod(p.doc);
            w.pod(p.tf);
        }
    }
    w.raw(kTrailer, sizeof kTrailer);
    if (!out) {
        throw InputError("write failed for " + path.string());
    }
}

Bm25Index load_index(std::filesystem::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Reader r(std::move(bytes), path.string());
    if (!r.match(kMagic, sizeof kMagic)) {
        throw FormatError(path.string() + ": not an index file (bad magic bytes)");
    }
    if (auto version = r.pod<std::uint32_t>(); version != kLayoutVersion) {
        throw FormatError(path.string() + ": unsupported index layout version " + std::to_string(version));
    }
    Bm25Index index;
    index.params.k1 = r.pod<double>();
    index.params.b = r.pod<double>();
    index.avgdl = r.pod<double>();
    auto n = r.pod<std::uint64_t>();
    if (n > (1ULL << 32)) {
        r.corrupt("document count");
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        index.doc_ids.push_back(r.str());
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        index.doc_lengths.push_back(r.pod<std::uint32_t>());
    }
    auto vocab = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < vocab; ++i) {
        auto term = r.str();
        auto count = r.pod<std::uint64_t>();
        if (count > n) {
            r.corrupt("posting list longer than the collection");
        }
        std::vector<Posting> list;
        list.reserve(count);
        for (std::uint64_t j = 0; j < count; ++j) {
            auto doc = r.pod<std::uint32_t>();
            auto tf = r.pod<std::uint32_t>();
            if (doc >= n) {
                r.corrupt("posting refers to an unknown document");
            }
            list.push_back({doc, tf});
        }
        index.df[term] = static_cast<std::uint32_t>(list.size());
        index.postings.emplace(std::move(term), std::move(list));
    }
    if (!r.match(kTrailer, sizeof kTrailer) || !r.at_end()) {
        r.corrupt("missing trailer");
    }
    return index;
}

Retriever::Retriever(std::shared_ptr<Bm25Index const> index, std::size_t top_k)
    : m_engine(std::move(index)), m_top_k(top_k)
{
    if (m_top_k == 0) {
        throw InputError("top-k must be positive");
    }
}

Retriever::Retriever(std::shared_ptr<DenseStore const> store, std::size_t top_k)
    : m_engine(std::move(store)), m_top_k(top_k)
{
    if (m_top_k == 0) {
        throw InputError("top-k must be positive");
    }
}

Retriever::Kind Retriever::kind() const
{
    return m_engine.index() == 0 ? Kind::bm25 : Kind::embedding;
}

std::size_t Retriever::num_docs() const
{
    if (kind() == Kind::bm25) {
        return std::get<0>(m_engine)->num_docs();
    }
    return std::get<1>(m_engine)->docs.ids.size();
}

Ranking Retriever::retrieve(Tokens const &query) const { return retrieve(query, m_top_k); }

Ranking Retriever::retrieve(Tokens const &query, std::size_t k) const
{
    if (k == 0) {
        throw InputError("k must be at least 1");
    }
    if (query.empty()) {
        return {};
    }
    if (kind() == Kind::embedding) {
        auto const &store = *std::get<1>(m_engine);
        return retrieve_vector(sentence_embedding(query, *store.table), k);
    }
    auto const &index = *std::get<0>(m_engine);
    std::vector<double> acc(index.num_docs(), 0.0);
    for (auto const &term : query) {
        auto it = index.postings.find(term);
        if (it == index.postings.end()) {
            continue;
        }
        double idf = index.idf(term);
        for (auto const &p : it->second) {
            acc[p.doc] += term_weight(index, idf, p.tf, p.doc);
        }
    }
    Ranking candidates;
    for (std::uint32_t d = 0; d < acc.size(); ++d) {
        if (acc[d] > 0.0) {
            candidates.push_back({index.doc_ids[d], acc[d]});
        }
    }
    return top_k_of(std::move(candidates), k);
}

Ranking Retriever::retrieve_vector(Vector const &query, std::size_t k) const
{
    if (kind() != Kind::embedding) {
        throw InputError("vector retrieval needs a dense retriever");
    }
    if (k == 0) {
        throw InputError("k must be at least 1");
    }
    double qn = query.norm();
    if (qn == 0.0) {
        return {};
    }
    auto const &store = *std::get<1>(m_engine);
    Ranking candidates;
    candidates.reserve(store.docs.ids.size());
    for (std::size_t i = 0; i < store.docs.ids.size(); ++i) {
        auto const &v = store.docs.vectors[i];
        double vn = v.norm();
        if (vn == 0.0) {
            continue;
        }
        candidates.push_back({store.docs.ids[i], query.dot(v) / (qn * vn)});
    }
    return top_k_of(std::move(candidates), k);
}

}  // namespace sayt
