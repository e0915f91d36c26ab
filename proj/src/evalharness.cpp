#include "sayt/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "sayt/error.hpp"

namespace sayt {

namespace {

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn &&fn)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto &t : workers) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::string fmt(char const *spec, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

BestMap const &best_for(BestMaps const &best, std::string const &id)
{
    auto it = best.find(id);
    if (it == best.end()) {
        throw InputError("no best-possible MAP computed for query " + id);
    }
    return it->second;
}

std::vector<CurvePoint> aggregate_curve(std::vector<EvalRecord> const &records)
{
    std::size_t longest = 0;
    for (auto const &r : records) {
        longest = std::max(longest, r.map_trace.size());
    }
    std::vector<CurvePoint> curve(longest);
    for (std::size_t i = 0; i < longest; ++i) {
        curve[i].position = i + 1;
    }
    for (auto const &r : records) {
        for (std::size_t i = 0; i < r.map_trace.size(); ++i) {
            curve[i].mean_map += r.map_trace[i];
            ++curve[i].count;
        }
    }
    for (auto &p : curve) {
        if (p.count > 0) {
            p.mean_map /= static_cast<double>(p.count);
        }
    }
    return curve;
}

}  // namespace

EvalRecord simulate_session(TriggerPolicy const &policy, Query const &query, Retriever const &retriever,
                            std::set<std::string> const &relevant, BestMap const &best, bool early_stop)
{
    EvalRecord rec;
    rec.query_id = query.id;
    rec.num_tokens = query.tokens.size();
    rec.map_best = best.map_best;
    SessionState state;
    for (std::size_t t = 0; t < query.tokens.size(); ++t) {
        auto const &token = query.tokens[t];
        bool last = t + 1 == query.tokens.size();
        state.q2.push_back(token);
        auto action = policy.decide(state, token, last);
        TokenStep step{token, action, 0.0, state.last_map};
        if (action == Action::search) {
            double before = state.last_map;
            state = apply_action(std::move(state), action, retriever, relevant);
            policy.on_search(state);
            ++rec.ts;
            step.delta_map = state.last_map - before;
            step.held_map = state.last_map;
        }
        rec.map_trace.push_back(state.last_map);
        rec.steps.push_back(std::move(step));
        if (early_stop && action == Action::search && state.last_map >= best.map_best) {
            rec.n_q = t + 1;
            rec.reached_best = true;
            rec.final_map = state.last_map;
            return rec;
        }
    }
    rec.n_q = rec.num_tokens;
    rec.final_map = state.last_map;
    rec.reached_best = state.last_map >= best.map_best;
    return rec;
}

BestMaps compute_best_maps(std::vector<Query> const &queries, Retriever const &retriever, Qrels const &qrels,
                           std::size_t jobs)
{
    std::vector<BestMap> out(queries.size());
    parallel_for(queries.size(), jobs, [&](std::size_t i) { out[i] = best_possible_map(queries[i], retriever, qrels); });
    BestMaps best;
    for (auto &b : out) {
        best.emplace(b.query_id, std::move(b));
    }
    return best;
}

Report run_evaluation(TriggerPolicy const &policy, std::vector<Query> const &queries, Retriever const &retriever,
                      Qrels const &qrels, BestMaps const &best, std::size_t jobs)
{
    Report report;
    report.policy = policy.name();
    report.records.resize(queries.size());
    parallel_for(queries.size(), jobs, [&](std::size_t i) {
        auto const &q = queries[i];
        auto relevant = relevant_set(qrels, q.id);
        if (relevant.empty()) {
            throw InputError("no relevance judgments for query " + q.id);
        }
        report.records[i] = simulate_session(policy, q, retriever, relevant, best_for(best, q.id), true);
    });
    std::sort(report.records.begin(), report.records.end(),
              [](EvalRecord const &a, EvalRecord const &b) { return a.query_id < b.query_id; });
    double effort = 0.0;
    double ts = 0.0;
    for (auto const &r : report.records) {
        effort += static_cast<double>(r.n_q);
        ts += static_cast<double>(r.ts);
    }
    if (!report.records.empty()) {
        effort /= static_cast<double>(report.records.size());
        ts /= static_cast<double>(report.records.size());
    }
    report.effort = effort;
    report.ts_mean = ts;
    return report;
}

std::vector<CurvePoint> quality_curve(TriggerPolicy const &policy, std::vector<Query> const &queries,
                                      Retriever const &retriever, Qrels const &qrels, std::size_t jobs)
{
    std::vector<EvalRecord> records(queries.size());
    parallel_for(queries.size(), jobs, [&](std::size_t i) {
        auto const &q = queries[i];
        BestMap unreachable{q.id, 2.0, q.tokens.size()};
        records[i] = simulate_session(policy, q, retriever, relevant_set(qrels, q.id), unreachable, false);
    });
    std::sort(records.begin(), records.end(),
              [](EvalRecord const &a, EvalRecord const &b) { return a.query_id < b.query_id; });
    return aggregate_curve(records);
}

ComparisonRow compare(Report const &base, Report const &other)
{
    if (base.records.size() != other.records.size()) {
        throw InputError("reports cover different numbers of queries");
    }
    std::vector<double> ts_base;
    std::vector<double> ts_other;
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        if (base.records[i].query_id != other.records[i].query_id) {
            throw InputError("reports cover different query sets (" + base.records[i].query_id + " vs " +
                             other.records[i].query_id + ")");
        }
        ts_base.push_back(static_cast<double>(base.records[i].ts));
        ts_other.push_back(static_cast<double>(other.records[i].ts));
    }
    ComparisonRow row;
    row.policy = other.policy;
    row.effort = other.effort;
    row.ts_mean = other.ts_mean;
    row.delta_effort_pct = base.effort != 0.0 ? 100.0 * (other.effort - base.effort) / base.effort : 0.0;
    row.delta_ts_pct = base.ts_mean != 0.0 ? 100.0 * (other.ts_mean - base.ts_mean) / base.ts_mean : 0.0;
    if (ts_base.size() >= 2) {
        auto test = paired_t_test(ts_other, ts_base);
        row.t = test.t;
        row.p = test.p;
    }
    row.significant = row.p < significance_level;
    return row;
}

std::string report_json(Report const &report)
{
    nlohmann::ordered_json doc;
    doc["policy"] = report.policy;
    doc["num_queries"] = report.records.size();
    doc["effort"] = report.effort;
    doc["ts_mean"] = report.ts_mean;
    auto records = nlohmann::ordered_json::array();
    for (auto const &r : report.records) {
        nlohmann::ordered_json rec;
        rec["id"] = r.query_id;
        rec["n_q"] = r.n_q;
        rec["N_q"] = r.num_tokens;
        rec["ts"] = r.ts;
        rec["reached_best"] = r.reached_best;
        rec["map_best"] = r.map_best;
        rec["final_map"] = r.final_map;
        rec["map_trace"] = r.map_trace;
        records.push_back(std::move(rec));
    }
    doc["queries"] = std::move(records);
    auto curve = nlohmann::ordered_json::array();
    for (auto const &p : report.curve) {
        curve.push_back({{"position", p.position}, {"mean_map", p.mean_map}, {"count", p.count}});
    }
    doc["curve"] = std::move(curve);
    return doc.dump(2) + "\n";
}

void write_report_json(std::filesystem::path const &path, Report const &report)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << report_json(report);
}

Report load_report_json(std::filesystem::path const &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    try {
        auto doc = nlohmann::json::parse(in);
        Report report;
        report.policy = doc.at("policy").get<std::string>();
        report.effort = doc.at("effort").get<double>();
        report.ts_mean = doc.at("ts_mean").get<double>();
        for (auto const &rec : doc.at("queries")) {
            EvalRecord r;
            r.query_id = rec.at("id").get<std::string>();
            r.n_q = rec.at("n_q").get<std::size_t>();
            r.num_tokens = rec.at("N_q").get<std::size_t>();
            r.ts = rec.at("ts").get<std::size_t>();
            r.reached_best = rec.at("reached_best").get<bool>();
            r.map_best = rec.at("map_best").get<double>();
            r.final_map = rec.at("final_map").get<double>();
            r.map_trace = rec.at("map_trace").get<std::vector<double>>();
            report.records.push_back(std::move(r));
        }
        if (doc.contains("curve")) {
            for (auto const &p : doc.at("curve")) {
                report.curve.push_back({p.at("position").get<std::size_t>(), p.at("mean_map").get<double>(),
                                        p.at("count").get<std::size_t>()});
            }
        }
        return report;
    } catch (nlohmann::json::exception const &e) {
        throw FormatError(path.string() + ": malformed report: " + e.what());
    }
}

void write_summary_csv(std::ostream &out, std::vector<ComparisonRow> const &rows)
{
    out << "policy,effort,ts_mean,delta_effort_pct,delta_ts_pct,t,p,significant\n";
    for (auto const &r : rows) {
        out << r.policy << ',' << fmt("%.4f", r.effort) << ',' << fmt("%.4f", r.ts_mean) << ','
            << fmt("%.2f", r.delta_effort_pct) << ',' << fmt("%.2f", r.delta_ts_pct) << ',' << fmt("%.4f", r.t)
            << ',' << fmt("%.6g", r.p) << ',' << (r.significant ? "true" : "false") << '\n';
    }
}

void write_comparison_table(std::ostream &out, std::vector<ComparisonRow> const &rows)
{
    char line[160];
    std::snprintf(line, sizeof line, "%-10s %8s %8s %12s %12s %9s %10s\n", "policy", "effort", "ts", "dEffort(%)",
                  "dTS(%)", "t", "p");
    out << line;
    for (auto const &r : rows) {
        std::snprintf(line, sizeof line, "%-10s %8.2f %8.2f %12.2f %11.2f%s %9.3f %10.4g\n", r.policy.c_str(),
                      r.effort, r.ts_mean, r.delta_effort_pct, r.delta_ts_pct, r.significant ? "*" : " ", r.t,
                      r.p);
        out << line;
    }
}

void write_curve_csv(std::ostream &out, std::vector<CurvePoint> const &curve)
{
    out << "position,mean_map,count\n";
    for (auto const &p : curve) {
        out << p.position << ',' << fmt("%.6f", p.mean_map) << ',' << p.count << '\n';
    }
}

std::string render_curves_svg(std::vector<CurveSeries> const &series)
{
    constexpr double width = 640;
    constexpr double height = 400;
    constexpr double left = 60;
    constexpr double right = 20;
    constexpr double top = 30;
    constexpr double bottom = 50;
    static char const *const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::size_t max_pos = 1;
    for (auto const &s : series) {
        max_pos = std::max(max_pos, s.curve.size());
    }
    auto x_of = [&](double pos) {
        double span = max_pos > 1 ? static_cast<double>(max_pos - 1) : 1.0;
        return left + (pos - 1.0) / span * (width - left - right);
    };
    auto y_of = [&](double map) { return top + (1.0 - map) * (height - top - bottom); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << y_of(0) << "\" x2=\"" << width - right << "\" y2=\"" << y_of(0)
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << y_of(0) << "\" x2=\"" << left << "\" y2=\"" << y_of(1)
        << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        double v = tick / 4.0;
        svg << "<text x=\"" << left - 8 << "\" y=\"" << fmt("%.1f", y_of(v) + 4) << "\" text-anchor=\"end\">"
            << fmt("%.2f", v) << "</text>\n";
    }
    for (std::size_t pos = 1; pos <= max_pos; ++pos) {
        svg << "<text x=\"" << fmt("%.1f", x_of(static_cast<double>(pos))) << "\" y=\"" << y_of(0) + 16
            << "\" text-anchor=\"middle\">" << pos << "</text>\n";
    }
    svg << "<text x=\"" << (left + width - right) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">token position</text>\n";
    svg << "<text x=\"16\" y=\"" << (top + height - bottom) / 2 << "\" transform=\"rotate(-90 16 "
        << (top + height - bottom) / 2 << ")\" text-anchor=\"middle\">mean MAP</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        char const *color = colors[k % std::size(colors)];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (auto const &p : series[k].curve) {
            svg << fmt("%.1f", x_of(static_cast<double>(p.position))) << ',' << fmt("%.1f", y_of(p.mean_map)) << ' ';
        }
        svg << "\"/>\n";
        double ly = top + 14.0 * static_cast<double>(k);
        svg << "<line x1=\"" << width - right - 110 << "\" y1=\"" << ly << "\" x2=\"" << width - right - 90
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << width - right - 85 << "\" y=\"" << ly + 4 << "\">" << series[k].label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace sayt
