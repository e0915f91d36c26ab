#include "sayt/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "sayt/error.hpp"

namespace sayt {

double average_precision(Ranking const &ranking, std::set<std::string> const &relevant)
{
    if (relevant.empty()) {
        throw InputError("average precision is undefined without relevant documents");
    }
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.count(ranking[i].id) != 0) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

BestMap best_possible_map(Query const &query, Retriever const &retriever, Qrels const &qrels)
{
    auto relevant = relevant_set(qrels, query.id);
    if (relevant.empty()) {
        throw InputError("no relevance judgments for query " + query.id);
    }
    BestMap best{query.id, -1.0, 1};
    Tokens prefix;
    for (std::size_t i = 0; i < query.tokens.size(); ++i) {
        prefix.push_back(query.tokens[i]);
        double ap = average_precision(retriever.retrieve(prefix), relevant);
        if (ap > best.map_best) {
            best.map_best = ap;
            best.first_position = i + 1;
        }
    }
    return best;
}

namespace {

// Lentz's method for the continued fraction of I_x(a, b).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double tol = 1e-10;
    constexpr int max_iter = 10000;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) {
        d = tiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) {
            c = tiny;
        }
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < tol) {
            break;
        }
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x)
{
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                       b * std::log1p(-x);
    double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double dof)
{
    if (std::isinf(t)) {
        return 0.0;
    }
    return incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
}

TTest paired_t_test(std::span<double const> a, std::span<double const> b)
{
    if (a.size() != b.size()) {
        throw InputError("paired t-test needs equal-length samples");
    }
    if (a.size() < 2) {
        throw InputError("paired t-test needs at least two pairs");
    }
    auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean += a[i] - b[i];
    }
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double dev = (a[i] - b[i]) - mean;
        ss += dev * dev;
    }
    double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) {
        if (mean == 0.0) {
            return {0.0, 1.0};
        }
        return {std::copysign(std::numeric_limits<double>::infinity(), mean), 0.0};
    }
    double t = mean / (sd / std::sqrt(n));
    return {t, student_t_two_tailed(t, n - 1.0)};
}

void write_trec_run(std::ostream &out, std::string const &query_id, Ranking const &ranking,
                    std::string const &tag)
{
    char buf[64];
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", ranking[i].score);
        out << query_id << " Q0 " << ranking[i].id << ' ' << (i + 1) << ' ' << buf << ' ' << tag << '\n';
    }
}

}  // namespace sayt
