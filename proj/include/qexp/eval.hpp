#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"

#include "qexp/error.hpp"

namespace qexp {

/// Relevance judgments: query_id -> doc_id -> grade. Grade >= 1 is relevant.
using Qrels = std::map<std::string, std::map<std::string, int>>;

/// Ranked doc_ids per query, best first.
using Run = std::map<std::string, std::vector<std::string>>;

/// Reads `query_id 0 doc_id grade` lines. Negative grades are stored as 0.
inline Qrels parse_qrels(std::istream& in) {
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, iter, doc;
        int grade = 0;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> iter >> doc >> grade)) {
            throw EvalError("qrels line " + std::to_string(line_no) + ": expected `query_id 0 doc_id grade`");
        }
        qrels[qid][doc] = std::max(grade, 0);
    }
    return qrels;
}

/// Reads TREC run lines (`query_id Q0 doc_id rank score tag`). Documents are
/// ordered by the rank column; equal ranks keep file order.
inline Run parse_run(std::istream& in) {
    std::map<std::string, std::vector<std::pair<long, std::string>>> raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string qid, q0, doc, tag;
        long rank = 0;
        double score = 0.0;
        if (!(fields >> qid)) {
            continue;
        }
        if (!(fields >> q0 >> doc >> rank >> score)) {
            throw EvalError("run line " + std::to_string(line_no) + ": expected `query_id Q0 doc_id rank score tag`");
        }
        raw[qid].emplace_back(rank, doc);
    }
    Run run;
    for (auto& [qid, entries] : raw) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& docs = run[qid];
        for (auto& e : entries) {
            docs.push_back(std::move(e.second));
        }
    }
    return run;
}

inline std::uint32_t count_relevant(const std::map<std::string, int>& judged) {
    return static_cast<std::uint32_t>(
        std::count_if(judged.begin(), judged.end(), [](const auto& kv) { return kv.second >= 1; }));
}

inline bool is_relevant(const std::map<std::string, int>& judged, const std::string& doc) {
    auto it = judged.find(doc);
    return it != judged.end() && it->second >= 1;
}

/// AP = (1 / R) * sum over relevant retrieved documents of precision at their
/// rank. Requires R > 0.
inline double average_precision(std::span<const std::string> ranking, const std::map<std::string, int>& judged) {
    auto rel_total = count_relevant(judged);
    if (rel_total == 0) {
        throw EvalError("average_precision: query has no relevant documents");
    }
    double sum = 0.0;
    std::uint32_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (is_relevant(judged, ranking[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / rel_total;
}

/// Relevant documents among the first k, divided by k (short rankings are
/// padded with non-relevant documents).
inline double precision_at(std::span<const std::string> ranking, const std::map<std::string, int>& judged,
                           std::size_t k = 10) {
    std::size_t n = std::min(k, ranking.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        hits += is_relevant(judged, ranking[i]) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

inline std::uint32_t relevant_retrieved(std::span<const std::string> ranking,
                                        const std::map<std::string, int>& judged) {
    return static_cast<std::uint32_t>(
        std::count_if(ranking.begin(), ranking.end(), [&](const auto& d) { return is_relevant(judged, d); }));
}

struct QueryMetrics {
    double ap = 0.0;
    double p10 = 0.0;
    std::uint32_t rel_ret = 0;
    std::uint32_t rel_total = 0;
};

struct EvalReport {
    std::map<std::string, QueryMetrics> per_query;
    double map_score = 0.0;
    double p10_mean = 0.0;
    std::uint64_t rel_ret_total = 0;
    std::vector<std::string> excluded;  // in the run but without relevant documents
};

/// Evaluates every query of `run` that has at least one relevant document,
/// looking at the first `depth` documents.
inline EvalReport evaluate_run(const Run& run, const Qrels& qrels, std::size_t depth = 1000) {
    EvalReport report;
    static const std::map<std::string, int> no_judgments;
    for (const auto& [qid, docs] : run) {
        auto it = qrels.find(qid);
        const auto& judged = it == qrels.end() ? no_judgments : it->second;
        auto rel_total = count_relevant(judged);
        if (rel_total == 0) {
            report.excluded.push_back(qid);
            continue;
        }
        std::span<const std::string> ranking(docs.data(), std::min(depth, docs.size()));
        QueryMetrics m;
        m.ap = average_precision(ranking, judged);
        m.p10 = precision_at(ranking, judged, 10);
        m.rel_ret = relevant_retrieved(ranking, judged);
        m.rel_total = rel_total;
        report.per_query.emplace(qid, m);
    }
    double ap_sum = 0.0;
    double p10_sum = 0.0;
    for (const auto& [qid, m] : report.per_query) {
        ap_sum += m.ap;
        p10_sum += m.p10;
        report.rel_ret_total += m.rel_ret;
    }
    if (!report.per_query.empty()) {
        report.map_score = ap_sum / static_cast<double>(report.per_query.size());
        report.p10_mean = p10_sum / static_cast<double>(report.per_query.size());
    }
    return report;
}

inline void require_same_queries(const EvalReport& a, const EvalReport& b) {
    std::vector<std::string> only_a, only_b;
    for (const auto& [q, m] : a.per_query) {
        if (!b.per_query.contains(q)) {
            only_a.push_back(q);
        }
    }
    for (const auto& [q, m] : b.per_query) {
        if (!a.per_query.contains(q)) {
            only_b.push_back(q);
        }
    }
    if (only_a.empty() && only_b.empty()) {
        return;
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) {
            s += (s.empty() ? "" : ",") + x;
        }
        return s.empty() ? std::string("-") : s;
    };
    throw EvalError("query sets differ: only in run [" + join(only_a) + "], only in baseline [" + join(only_b) + "]");
}

struct ImprovementCount {
    double percent = 0.0;
    std::size_t improved = 0;
    std::size_t total = 0;
};

/// Share of queries whose AP exceeds the baseline AP by strictly more than
/// `threshold` (relative).
inline ImprovementCount pct_improved(const EvalReport& run, const EvalReport& baseline, double threshold = 0.05) {
    require_same_queries(run, baseline);
    ImprovementCount c;
    c.total = run.per_query.size();
    for (const auto& [q, m] : run.per_query) {
        if (m.ap > baseline.per_query.at(q).ap * (1.0 + threshold)) {
            ++c.improved;
        }
    }
    c.percent = c.total == 0 ? 0.0 : 100.0 * static_cast<double>(c.improved) / static_cast<double>(c.total);
    return c;
}

struct TTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
    bool significant_95 = false;
    bool degenerate = false;  // differences had zero variance
    std::size_t n = 0;
};

/// Two-tailed paired t-test on a - b with n - 1 degrees of freedom.
/// All-zero differences give p = 1; constant nonzero differences give
/// p = 0 with an infinite statistic, flagged degenerate.
inline TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("paired_t_test: samples differ in length");
    }
    if (a.size() < 2) {
        throw InvalidArgument("paired_t_test: need at least two pairs");
    }
    TTestResult r;
    r.n = a.size();
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
    }
    double n = static_cast<double>(r.n);
    double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / n;
    double ss = 0.0;
    for (double d : diff) {
        ss += (d - mean) * (d - mean);
    }
    double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) {
        r.degenerate = true;
        if (mean == 0.0) {
            r.t_stat = 0.0;
            r.p_value = 1.0;
        } else {
            r.t_stat = mean > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
            r.p_value = 0.0;
        }
    } else {
        r.t_stat = mean / (sd / std::sqrt(n));
        boost::math::students_t dist(n - 1.0);
        r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t_stat)));
    }
    r.significant_95 = r.p_value < 0.05;
    return r;
}

inline std::pair<std::vector<double>, std::vector<double>> paired_ap(const EvalReport& a, const EvalReport& b) {
    require_same_queries(a, b);
    std::vector<double> xs, ys;
    for (const auto& [q, m] : a.per_query) {
        xs.push_back(m.ap);
        ys.push_back(b.per_query.at(q).ap);
    }
    return {xs, ys};
}

// ---------------------------------------------------------------------------
// Comparison tables

struct ReferenceRun {
    std::string name;
    char marker;
};

/// Reference runs and their significance markers: no feedback (B), KLD (k),
/// modified Bo1 (b), modified LCA (l), RM3 (r).
inline std::vector<ReferenceRun> default_references() {
    return {{"baseline", 'B'}, {"kld", 'k'}, {"bo1new", 'b'}, {"lcanew", 'l'}, {"rm3", 'r'}};
}

struct TableRow {
    std::string name;
    double map_score = 0.0;
    double map_delta_pct = 0.0;
    double p10 = 0.0;
    double p10_delta_pct = 0.0;
    std::uint64_t rel_ret = 0;
    double rel_ret_delta_pct = 0.0;
    ImprovementCount improved;
    std::size_t wins = 0;    // queries with AP above baseline
    std::size_t losses = 0;  // queries with AP below baseline
    std::string markers;     // references this run is significantly better than
};

struct CompareTable {
    std::string baseline;
    std::vector<TableRow> rows;
    std::map<std::string, std::map<std::string, double>> per_query_ap;  // run -> query -> AP
};

inline double delta_pct(double value, double base) {
    return base == 0.0 ? 0.0 : 100.0 * (value - base) / base;
}

/// Builds the method comparison: MAP, P@10 and relevant-retrieved with
/// their change against the baseline, the share of queries improved by more
/// than 5%, and a marker for every reference run this run beats with a
/// significant paired t-test. Rows follow `order` (defaults to name order).
inline CompareTable compare_table(const std::map<std::string, EvalReport>& runs, const std::string& baseline,
                                  const std::vector<ReferenceRun>& references = default_references(),
                                  std::vector<std::string> order = {}) {
    auto base_it = runs.find(baseline);
    if (base_it == runs.end()) {
        throw EvalError("baseline run not found: " + baseline);
    }
    const auto& base = base_it->second;
    if (order.empty()) {
        for (const auto& [name, r] : runs) {
            order.push_back(name);
        }
    }
    CompareTable table;
    table.baseline = baseline;
    for (const auto& name : order) {
        auto it = runs.find(name);
        if (it == runs.end()) {
            throw EvalError("run not found: " + name);
        }
        const auto& rep = it->second;
        TableRow row;
        row.name = name;
        row.map_score = rep.map_score;
        row.map_delta_pct = delta_pct(rep.map_score, base.map_score);
        row.p10 = rep.p10_mean;
        row.p10_delta_pct = delta_pct(rep.p10_mean, base.p10_mean);
        row.rel_ret = rep.rel_ret_total;
        row.rel_ret_delta_pct = delta_pct(static_cast<double>(rep.rel_ret_total), static_cast<double>(base.rel_ret_total));
        row.improved = pct_improved(rep, base);
        for (const auto& [q, m] : rep.per_query) {
            double b = base.per_query.at(q).ap;
            row.wins += m.ap > b ? 1 : 0;
            row.losses += m.ap < b ? 1 : 0;
            table.per_query_ap[name][q] = m.ap;
        }
        for (const auto& ref : references) {
            auto ref_it = runs.find(ref.name);
            if (ref.name == name || ref_it == runs.end()) {
                continue;
            }
            auto [xs, ys] = paired_ap(rep, ref_it->second);
            if (xs.size() < 2) {
                continue;
            }
            auto t = paired_t_test(xs, ys);
            if (t.significant_95 && rep.map_score > ref_it->second.map_score) {
                row.markers.push_back(ref.marker);
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

/// Aligned plain-text rendering. Percentages carry one decimal.
inline std::string format_table(const CompareTable& table) {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"method", "MAP", "(%)", "P@10", "(%)", "#rel_ret", "(%)", ">base%", ">base#", "W/L", "sig"});
    for (const auto& r : table.rows) {
        bool is_base = r.name == table.baseline;
        cells.push_back({r.name, format_fixed(r.map_score, 4), is_base ? "-" : format_fixed(r.map_delta_pct, 1),
                         format_fixed(r.p10, 4), is_base ? "-" : format_fixed(r.p10_delta_pct, 1),
                         std::to_string(r.rel_ret), is_base ? "-" : format_fixed(r.rel_ret_delta_pct, 1),
                         format_fixed(r.improved.percent, 1),
                         std::to_string(r.improved.improved) + "/" + std::to_string(r.improved.total),
                         std::to_string(r.wins) + "/" + std::to_string(r.losses), r.markers.empty() ? "-" : r.markers});
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    std::string out;
    for (const auto& row : cells) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::string cell = row[i];
            if (i == 0) {
                cell.resize(width[i], ' ');
            } else {
                cell.insert(0, width[i] - cell.size(), ' ');
            }
            out += (i == 0 ? "" : "  ") + cell;
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::json table_to_json(const CompareTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"name", r.name},
                        {"map", r.map_score},
                        {"map_delta_pct", r.map_delta_pct},
                        {"p10", r.p10},
                        {"p10_delta_pct", r.p10_delta_pct},
                        {"rel_ret", r.rel_ret},
                        {"rel_ret_delta_pct", r.rel_ret_delta_pct},
                        {"pct_improved", r.improved.percent},
                        {"improved_count", r.improved.improved},
                        {"query_count", r.improved.total},
                        {"wins", r.wins},
                        {"losses", r.losses},
                        {"significance", r.markers}});
    }
    return {{"baseline", table.baseline}, {"rows", rows}, {"per_query_ap", table.per_query_ap}};
}

}  // namespace qexp
