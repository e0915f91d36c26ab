#include "sayt/embeddings.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sayt/error.hpp"

namespace sayt {

Vector const *EmbeddingTable::find(std::string_view token) const
{
    auto it = m_vectors.find(std::string(token));
    return it == m_vectors.end() ? nullptr : &it->second;
}

void EmbeddingTable::set(std::string token, Vector vec)
{
    if (m_dim == 0) {
        m_dim = static_cast<std::size_t>(vec.size());
    }
    if (static_cast<std::size_t>(vec.size()) != m_dim || m_dim == 0) {
        throw InputError("vector for '" + token + "' has dimension " + std::to_string(vec.size()) +
                         ", expected " + std::to_string(m_dim));
    }
    m_vectors.insert_or_assign(std::move(token), std::move(vec));
}

std::vector<std::string> EmbeddingTable::tokens() const
{
    std::vector<std::string> out;
    out.reserve(m_vectors.size());
    for (auto const &kv : m_vectors) {
        out.push_back(kv.first);
    }
    std::sort(out.begin(), out.end());
    return out;
}

EmbeddingTable load_word_vectors(std::filesystem::path const &path, std::vector<std::string> *warnings)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) {
            continue;
        }
        values.clear();
        std::string field;
        while (fields >> field) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(field, &used));
                if (used != field.size()) {
                    throw std::invalid_argument(field);
                }
            } catch (std::exception const &) {
                throw FormatError(at_line(path.string(), lineno) + "not a number: " + field);
            }
        }
        if (values.empty()) {
            throw FormatError(at_line(path.string(), lineno) + "token without a vector");
        }
        if (table.dim() != 0 && values.size() != table.dim()) {
            throw FormatError(at_line(path.string(), lineno) + "dimension " +
                             std::to_string(values.size()) + " differs from " +
                             std::to_string(table.dim()));
        }
        if (warnings != nullptr && table.contains(token)) {
            warnings->push_back(at_line(path.string(), lineno) + "duplicate token '" + token +
                                "', keeping the last vector");
        }
        table.set(token, Eigen::Map<Vector const>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
    if (table.dim() == 0) {
        throw InputError(path.string() + ": no vectors, cannot determine the dimension");
    }
    return table;
}

void write_word_vectors(std::filesystem::path const &path, EmbeddingTable const &table)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    char buf[32];
    for (auto const &tok : table.tokens()) {
        out << tok;
        for (double x : *table.find(tok)) {
            std::snprintf(buf, sizeof buf, " %.17g", x);
            out << buf;
        }
        out << '\n';
    }
}

Vector token_vector(EmbeddingTable const &table, std::string_view token)
{
    if (auto const *v = table.find(token)) {
        return *v;
    }
    return Vector::Zero(static_cast<Eigen::Index>(table.dim()));
}

Vector sentence_embedding(Tokens const &tokens, EmbeddingTable const &table)
{
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(table.dim()));
    std::size_t hits = 0;
    for (auto const &tok : tokens) {
        if (auto const *v = table.find(tok)) {
            sum += *v;
            ++hits;
        }
    }
    if (hits > 0) {
        sum /= static_cast<double>(hits);
    }
    return sum;
}

double cosine_distance(Vector const &u, Vector const &v)
{
    double nu = u.norm();
    double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
        return 1.0;
    }
    double cos = u.dot(v) / (nu * nv);
    return 1.0 - std::clamp(cos, -1.0, 1.0);
}

DocVectors embed_documents(std::vector<Document> const &docs, EmbeddingTable const &table)
{
    DocVectors store;
    store.ids.reserve(docs.size());
    store.vectors.reserve(docs.size());
    for (auto const &doc : docs) {
        store.ids.push_back(doc.id);
        store.vectors.push_back(sentence_embedding(doc.tokens, table));
    }
    return store;
}

void write_doc_vectors(std::filesystem::path const &path, DocVectors const &store)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    for (std::size_t i = 0; i < store.ids.size(); ++i) {
        nlohmann::ordered_json obj;
        obj["id"] = store.ids[i];
        obj["vector"] = std::vector<double>(store.vectors[i].begin(), store.vectors[i].end());
        out << obj.dump() << '\n';
    }
}

DocVectors load_doc_vectors(std::filesystem::path const &path)
{
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    DocVectors store;
    std::string line;
    std::size_t lineno = 0;
    Eigen::Index dim = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            auto obj = nlohmann::json::parse(line);
            auto values = obj.at("vector").get<std::vector<double>>();
            auto vec = Eigen::Map<Vector const>(values.data(), static_cast<Eigen::Index>(values.size()));
            if (dim >= 0 && vec.size() != dim) {
                throw InputError("inconsistent vector dimension");
            }
            dim = vec.size();
            store.ids.push_back(obj.at("id").get<std::string>());
            store.vectors.emplace_back(vec);
        } catch (nlohmann::json::exception const &e) {
            throw FormatError(at_line(path.string(), lineno) + e.what());
        } catch (InputError const &e) {
            throw FormatError(at_line(path.string(), lineno) + e.what());
        }
    }
    return store;
}

}  // namespace sayt
