#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/retrieval.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
   public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        m_path = fs::temp_directory_path() /
                 ("sayt-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(m_path);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(m_path, ec);
    }
    TempDir(TempDir const &) = delete;
    TempDir &operator=(TempDir const &) = delete;

    [[nodiscard]] fs::path const &path() const { return m_path; }
    [[nodiscard]] fs::path operator/(std::string const &name) const { return m_path / name; }

   private:
    fs::path m_path;
};

inline void write_file(fs::path const &path, std::string const &text)
{
    std::ofstream out(path, std::ios::binary);
    out << text;
}

inline std::string read_file(fs::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<sayt::Document> docs(std::vector<std::pair<std::string, std::string>> const &items)
{
    std::vector<sayt::Document> out;
    for (auto const &[id, text] : items) {
        out.push_back({id, text, sayt::tokenize(text)});
    }
    return out;
}

inline sayt::Query query(std::string id, std::string const &text)
{
    return {std::move(id), text, sayt::tokenize(text)};
}

inline sayt::Retriever bm25(std::vector<std::pair<std::string, std::string>> const &items,
                            std::size_t top_k = sayt::default_top_k)
{
    return {std::make_shared<sayt::Bm25Index const>(sayt::build_index(docs(items))), top_k};
}

}  // namespace testing
