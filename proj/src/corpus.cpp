#include "sayt/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sayt/error.hpp"

namespace sayt {

namespace {

struct CodePoint {
    char32_t value;
    std::size_t length;
};

// Invalid sequences decode as a single byte so that no input is ever rejected.
CodePoint decode_utf8(std::string_view s, std::size_t pos)
{
    auto lead = static_cast<unsigned char>(s[pos]);
    if (lead < 0x80) {
        return {lead, 1};
    }
    std::size_t len = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        return {lead, 1};
    }
    if (pos + len > s.size()) {
        return {lead, 1};
    }
    for (std::size_t i = 1; i < len; ++i) {
        auto cont = static_cast<unsigned char>(s[pos + i]);
        if ((cont & 0xC0) != 0x80) {
            return {lead, 1};
        }
        cp = (cp << 6) | (cont & 0x3F);
    }
    return {cp, len};
}

bool is_space(char32_t c)
{
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

bool is_punct(char32_t c)
{
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
               (c >= 0x7B && c <= 0x7E);
    }
    return (c >= 0xA1 && c <= 0xBF) || c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x2027) ||
           (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x303F) ||
           (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
           (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65);
}

void push_token(Tokens &out, std::string_view raw)
{
    // strip edge punctuation by code point
    std::vector<CodePoint> cps;
    for (std::size_t pos = 0; pos < raw.size();) {
        auto cp = decode_utf8(raw, pos);
        cps.push_back(cp);
        pos += cp.length;
    }
    std::size_t first = 0;
    std::size_t last = cps.size();
    while (first < last && is_punct(cps[first].value)) {
        ++first;
    }
    while (last > first && is_punct(cps[last - 1].value)) {
        --last;
    }
    if (first == last) {
        return;
    }
    std::size_t begin = 0;
    for (std::size_t i = 0; i < first; ++i) {
        begin += cps[i].length;
    }
    std::size_t end = begin;
    for (std::size_t i = first; i < last; ++i) {
        end += cps[i].length;
    }
    std::string token(raw.substr(begin, end - begin));
    std::transform(token.begin(), token.end(), token.begin(), [](char ch) {
        return (ch >= 'A' && ch <= 'Z') ? static_cast<char>(ch - 'A' + 'a') : ch;
    });
    out.push_back(std::move(token));
}

std::ifstream open_input(std::filesystem::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    return in;
}

std::ofstream open_output(std::filesystem::path const &path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    return out;
}

void chomp(std::string &line)
{
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

Tokens tokenize(std::string_view text)
{
    Tokens out;
    std::size_t start = 0;
    bool in_token = false;
    for (std::size_t pos = 0; pos < text.size();) {
        auto cp = decode_utf8(text, pos);
        if (is_space(cp.value)) {
            if (in_token) {
                push_token(out, text.substr(start, pos - start));
                in_token = false;
            }
        } else if (!in_token) {
            start = pos;
            in_token = true;
        }
        pos += cp.length;
    }
    if (in_token) {
        push_token(out, text.substr(start));
    }
    return out;
}

std::vector<std::string> StopwordList::sorted() const
{
    std::vector<std::string> words(m_words.begin(), m_words.end());
    std::sort(words.begin(), words.end());
    return words;
}

bool is_stopword(StopwordList const &list, std::string_view token) { return list.contains(token); }

std::vector<Document> load_documents(std::filesystem::path const &path)
{
    auto in = open_input(path);
    std::vector<Document> docs;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        chomp(line);
        if (is_blank(line)) {
            continue;
        }
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (nlohmann::json::parse_error const &e) {
            throw FormatError(at_line(path.string(), lineno) + "malformed JSON: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
            !obj.contains("text") || !obj["text"].is_string()) {
            throw FormatError(at_line(path.string(), lineno) +
                             "expected an object with string fields \"id\" and \"text\"");
        }
        Document doc;
        doc.id = obj["id"].get<std::string>();
        doc.text = obj["text"].get<std::string>();
        if (!seen.insert(doc.id).second) {
            throw InputError(at_line(path.string(), lineno) + "duplicate document id " + doc.id);
        }
        doc.tokens = tokenize(doc.text);
        docs.push_back(std::move(doc));
    }
    return docs;
}

void write_documents(std::filesystem::path const &path, std::vector<Document> const &docs)
{
    auto out = open_output(path);
    for (auto const &doc : docs) {
        nlohmann::ordered_json obj;
        obj["id"] = doc.id;
        obj["text"] = doc.text;
        out << obj.dump() << '\n';
    }
}

std::vector<Query> load_queries(std::filesystem::path const &path)
{
    auto in = open_input(path);
    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        chomp(line);
        if (is_blank(line)) {
            continue;
        }
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(at_line(path.string(), lineno) + "expected id<TAB>text");
        }
        Query q;
        q.id = line.substr(0, tab);
        q.raw = line.substr(tab + 1);
        if (q.id.empty()) {
            throw InputError(at_line(path.string(), lineno) + "empty query id");
        }
        if (!seen.insert(q.id).second) {
            throw InputError(at_line(path.string(), lineno) + "duplicate query id " + q.id);
        }
        q.tokens = tokenize(q.raw);
        if (q.tokens.empty()) {
            throw InputError(at_line(path.string(), lineno) + "query " + q.id + " has no tokens");
        }
        queries.push_back(std::move(q));
    }
    return queries;
}

void write_queries(std::filesystem::path const &path, std::vector<Query> const &queries)
{
    auto out = open_output(path);
    for (auto const &q : queries) {
        out << q.id << '\t' << q.raw << '\n';
    }
}

Qrels load_qrels(std::filesystem::path const &path)
{
    auto in = open_input(path);
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        chomp(line);
        if (is_blank(line)) {
            continue;
        }
        std::istringstream fields(line);
        std::string qid, iter, docid, rel, extra;
        if (!(fields >> qid >> iter >> docid >> rel) || (fields >> extra)) {
            throw FormatError(at_line(path.string(), lineno) + "expected 4 fields: qid iter docid rel");
        }
        int grade = 0;
        auto [ptr, ec] = std::from_chars(rel.data(), rel.data() + rel.size(), grade);
        if (ec != std::errc() || ptr != rel.data() + rel.size()) {
            throw FormatError(at_line(path.string(), lineno) + "relevance is not an integer: " + rel);
        }
        if (grade > 0) {
            qrels[qid][docid] = grade;
        } else if (auto it = qrels.find(qid); it != qrels.end()) {
            it->second.erase(docid);
            if (it->second.empty()) {
                qrels.erase(it);
            }
        }
    }
    return qrels;
}

void write_qrels(std::filesystem::path const &path, Qrels const &qrels)
{
    auto out = open_output(path);
    for (auto const &[qid, docs] : qrels) {
        for (auto const &[docid, grade] : docs) {
            out << qid << " 0 " << docid << ' ' << grade << '\n';
        }
    }
}

StopwordList load_stopwords(std::filesystem::path const &path)
{
    auto in = open_input(path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        chomp(line);
        if (is_blank(line) || line.front() == '#') {
            continue;
        }
        for (auto &tok : tokenize(line)) {
            words.insert(std::move(tok));
        }
    }
    return StopwordList(std::move(words));
}

std::vector<std::string> const &default_stopword_words()
{
    static std::vector<std::string> const words = {
        "a",        "about",      "above",   "after",     "again",   "against", "all",
        "am",       "an",         "and",     "any",       "are",     "as",      "at",
        "be",       "because",    "been",    "before",    "being",   "below",   "between",
        "both",     "but",        "by",      "can",       "could",   "did",     "do",
        "does",     "doing",      "down",    "during",    "each",    "few",     "for",
        "from",     "further",    "had",     "has",       "have",    "having",  "he",
        "her",      "here",       "hers",    "herself",   "him",     "himself", "his",
        "how",      "i",          "if",      "in",        "into",    "is",      "it",
        "its",      "itself",     "just",    "me",        "more",    "most",    "my",
        "myself",   "no",         "nor",     "not",       "now",     "of",      "off",
        "on",       "once",       "only",    "or",        "other",   "our",     "ours",
        "ourselves", "out",       "over",    "own",       "same",    "she",     "should",
        "so",       "some",       "such",    "than",      "that",    "the",     "their",
        "theirs",   "them",       "themselves", "then",   "there",   "these",   "they",
        "this",     "those",      "through", "to",        "too",     "under",   "until",
        "up",       "very",       "was",     "we",        "were",    "what",    "when",
        "where",    "which",      "while",   "who",       "whom",    "why",     "will",
        "with",     "would",      "you",     "your",      "yours",   "yourself", "yourselves",
    };
    return words;
}

StopwordList default_stopwords()
{
    auto const &words = default_stopword_words();
    return StopwordList(std::unordered_set<std::string>(words.begin(), words.end()));
}

std::set<std::string> relevant_set(Qrels const &qrels, std::string const &query_id)
{
    std::set<std::string> out;
    if (auto it = qrels.find(query_id); it != qrels.end()) {
        for (auto const &[docid, grade] : it->second) {
            if (grade > 0) {
                out.insert(docid);
            }
        }
    }
    return out;
}

}  // namespace sayt
