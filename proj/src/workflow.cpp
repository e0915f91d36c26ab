#include "sayt/workflow.hpp"

#include "sayt/error.hpp"
#include "sayt/neural.hpp"
#include "sayt/rl.hpp"

namespace sayt {

std::unique_ptr<TriggerPolicy> make_policy(PolicyConfig const &config)
{
    switch (config.kind) {
        case PolicyKind::set:
        case PolicyKind::slt:
            return std::make_unique<StaticPolicy>(config.kind);
        case PolicyKind::ss:
            return std::make_unique<StaticPolicy>(config.kind, config.stopwords.value_or(default_stopwords()));
        case PolicyKind::sm:
            if (!config.table) {
                throw InputError("policy sm needs word vectors (--vectors)");
            }
            return std::make_unique<SimilarityPolicy>(config.table, config.threshold);
        case PolicyKind::dqn: {
            if (!config.checkpoint) {
                throw InputError("policy dqn needs a trained checkpoint (--checkpoint)");
            }
            if (!config.table) {
                throw InputError("policy dqn needs word vectors (--vectors)");
            }
            auto params = std::make_shared<QNetworkParams const>(load_checkpoint(*config.checkpoint, config.table));
            return std::make_unique<DqnPolicy>(std::move(params));
        }
    }
    throw InputError("unknown policy kind");
}

Retriever make_dense_retriever(std::vector<Document> const &docs, std::shared_ptr<EmbeddingTable const> table,
                               std::size_t top_k)
{
    if (!table) {
        throw InputError("dense retrieval needs word vectors");
    }
    return make_dense_retriever(embed_documents(docs, *table), std::move(table), top_k);
}

Retriever make_dense_retriever(DocVectors docs, std::shared_ptr<EmbeddingTable const> table, std::size_t top_k)
{
    if (docs.ids.empty()) {
        throw InputError("cannot build a retriever over an empty collection");
    }
    auto store = std::make_shared<DenseStore const>(DenseStore{std::move(docs), std::move(table)});
    return Retriever(std::move(store), top_k);
}

Retriever make_bm25_retriever(Bm25Index index, std::size_t top_k)
{
    return Retriever(std::make_shared<Bm25Index const>(std::move(index)), top_k);
}

}  // namespace sayt
