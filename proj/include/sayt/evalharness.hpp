#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "sayt/corpus.hpp"
#include "sayt/metrics.hpp"
#include "sayt/policies.hpp"
#include "sayt/retrieval.hpp"

namespace sayt {

struct TokenStep {
    std::string token;
    Action action = Action::wait;
    /// Change in held AP caused by this step's search; 0 for WAIT.
    double delta_map = 0.0;
    /// AP of the results on screen after this step.
    double held_map = 0.0;
};

struct EvalRecord {
    std::string query_id;
    std::size_t n_q = 0;        // tokens typed until termination
    std::size_t num_tokens = 0; // N_q
    std::size_t ts = 0;         // searches issued
    bool reached_best = false;
    double map_best = 0.0;
    double final_map = 0.0;
    std::vector<double> map_trace;
    std::vector<TokenStep> steps;
};

/// Replays one query token by token through the policy. With early_stop the
/// session ends at the first SEARCH whose AP reaches map_best.
EvalRecord simulate_session(TriggerPolicy const &policy, Query const &query, Retriever const &retriever,
                            std::set<std::string> const &relevant, BestMap const &best, bool early_stop);

using BestMaps = std::map<std::string, BestMap>;

/// best_possible_map for every query; `jobs` worker threads.
BestMaps compute_best_maps(std::vector<Query> const &queries, Retriever const &retriever, Qrels const &qrels,
                           std::size_t jobs = 1);

struct CurvePoint {
    std::size_t position = 0;  // 1-based
    double mean_map = 0.0;
    std::size_t count = 0;     // queries with at least `position` tokens
};

struct Report {
    std::string policy;
    double effort = 0.0;
    double ts_mean = 0.0;
    /// Sorted by query id.
    std::vector<EvalRecord> records;
    std::vector<CurvePoint> curve;
};

/// Effort/TS evaluation with early stopping. Records are sorted by query id
/// before aggregation, so the result does not depend on `jobs`.
Report run_evaluation(TriggerPolicy const &policy, std::vector<Query> const &queries, Retriever const &retriever,
                      Qrels const &qrels, BestMaps const &best, std::size_t jobs = 1);

/// Mean held AP per token position over full replays (no early stop).
std::vector<CurvePoint> quality_curve(TriggerPolicy const &policy, std::vector<Query> const &queries,
                                      Retriever const &retriever, Qrels const &qrels, std::size_t jobs = 1);

struct ComparisonRow {
    std::string policy;
    double effort = 0.0;
    double ts_mean = 0.0;
    double delta_effort_pct = 0.0;
    double delta_ts_pct = 0.0;
    double t = 0.0;
    double p = 1.0;
    bool significant = false;
};

constexpr double significance_level = 0.01;

/// Percentage change of `other` relative to `base`, plus a paired t-test on
/// per-query search counts. Both reports must cover the same query ids.
ComparisonRow compare(Report const &base, Report const &other);

std::string report_json(Report const &report);
void write_report_json(std::filesystem::path const &path, Report const &report);
Report load_report_json(std::filesystem::path const &path);

/// policy,effort,ts_mean,delta_effort_pct,delta_ts_pct,t,p,significant
void write_summary_csv(std::ostream &out, std::vector<ComparisonRow> const &rows);
/// Fixed-width table with a '*' after significant TS changes.
void write_comparison_table(std::ostream &out, std::vector<ComparisonRow> const &rows);

/// position,mean_map,count
void write_curve_csv(std::ostream &out, std::vector<CurvePoint> const &curve);

struct CurveSeries {
    std::string label;
    std::vector<CurvePoint> curve;
};

/// Line plot of mean MAP against token position.
std::string render_curves_svg(std::vector<CurveSeries> const &series);

}  // namespace sayt
