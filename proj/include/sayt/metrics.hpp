#pragma once

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/retrieval.hpp"

namespace sayt {

/// trec_eval "map" semantics: sum of precision@r over relevant ranks r,
/// divided by the total number of relevant documents. Throws InputError on an
/// empty relevant set.
double average_precision(Ranking const &ranking, std::set<std::string> const &relevant);

struct BestMap {
    std::string query_id;
    double map_best = 0.0;
    /// 1-based prefix length of the earliest prefix attaining map_best.
    std::size_t first_position = 1;
};

/// Exhaustively searches every prefix of the query.
BestMap best_possible_map(Query const &query, Retriever const &retriever, Qrels const &qrels);

struct TTest {
    double t = 0.0;
    double p = 1.0;
};

/// Two-tailed paired Student t-test on a - b. All-zero differences give
/// (0, 1); zero-variance nonzero differences give p = 0 and t = +/-inf.
TTest paired_t_test(std::span<double const> a, std::span<double const> b);

/// Regularized incomplete beta I_x(a, b), continued fraction to 1e-10.
double incomplete_beta(double a, double b, double x);

/// Two-tailed tail probability of Student's t with `dof` degrees of freedom.
double student_t_two_tailed(double t, double dof);

/// TREC run lines: "qid Q0 docid rank score tag".
void write_trec_run(std::ostream &out, std::string const &query_id, Ranking const &ranking,
                    std::string const &tag);

}  // namespace sayt
