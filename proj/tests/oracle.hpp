#pragma once

// Straight-line reference implementations used by the tests. They work on
// plain token vectors and recompute every statistic by counting, sharing no
// code with the engine.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

struct Corpus {
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> docs;

    double n() const { return static_cast<double>(docs.size()); }

    double tf(const std::string& t, std::size_t d) const {
        return static_cast<double>(std::count(docs[d].begin(), docs[d].end(), t));
    }
    double len(std::size_t d) const { return static_cast<double>(docs[d].size()); }
    double total() const {
        double s = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) s += len(d);
        return s;
    }
    double avg_len() const { return total() / n(); }
    double df(const std::string& t) const {
        double s = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) s += tf(t, d) > 0 ? 1 : 0;
        return s;
    }
    double cf(const std::string& t) const {
        double s = 0;
        for (std::size_t d = 0; d < docs.size(); ++d) s += tf(t, d);
        return s;
    }
    double pc(const std::string& t) const { return cf(t) / total(); }
};

inline double ifb2(const Corpus& c, const std::string& t, std::size_t d, double k = 1.0) {
    double tf = c.tf(t, d);
    if (tf == 0) return 0.0;
    double tfn = tf * std::log2(1.0 + k * c.avg_len() / c.len(d));
    double cf = c.cf(t);
    return (cf + 1.0) / (c.df(t) * (tfn + 1.0)) * tfn * std::log2((c.n() + 1.0) / (cf + 0.5));
}

struct Hit {
    std::size_t doc;
    double score;
};

// Exhaustive scoring of every document; positive scores only, best first,
// ties by doc id.
inline std::vector<Hit> rank(const Corpus& c, const std::map<std::string, double>& query, double k = 1.0) {
    std::vector<Hit> hits;
    for (std::size_t d = 0; d < c.docs.size(); ++d) {
        double s = 0;
        for (const auto& [t, w] : query) s += w * ifb2(c, t, d, k);
        if (s > 0) hits.push_back({d, s});
    }
    std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
        if (a.score != b.score) return a.score > b.score;
        return c.ids[a.doc] < c.ids[b.doc];
    });
    return hits;
}

// Feedback set: document indices plus Sim(d, Q).
struct Prd {
    std::vector<std::size_t> docs;
    std::vector<double> sims;
};

inline Prd top(const std::vector<Hit>& hits, std::size_t depth) {
    Prd p;
    for (std::size_t i = 0; i < std::min(depth, hits.size()); ++i) {
        p.docs.push_back(hits[i].doc);
        p.sims.push_back(hits[i].score);
    }
    return p;
}

inline std::set<std::string> vocabulary(const Corpus& c, const Prd& p) {
    std::set<std::string> v;
    for (auto d : p.docs) v.insert(c.docs[d].begin(), c.docs[d].end());
    return v;
}

using Scores = std::map<std::string, double>;

inline Scores kld(const Corpus& c, const Prd& p) {
    double prd_len = 0;
    for (auto d : p.docs) prd_len += c.len(d);
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double in_prd = 0;
        for (auto d : p.docs) in_prd += c.tf(t, d);
        double pr = in_prd / prd_len;
        s[t] = pr * std::log(pr / c.pc(t));
    }
    return s;
}

inline Scores bo1(const Corpus& c, const Prd& p) {
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double sum_tf = 0;
        for (auto d : p.docs) sum_tf += c.tf(t, d);
        double f = c.cf(t) / c.n();
        s[t] = sum_tf * std::log2((1 + f) / f) + std::log2(1 + f);
    }
    return s;
}

inline Scores bo1new(const Corpus& c, const Prd& p) {
    double max_sim = *std::max_element(p.sims.begin(), p.sims.end());
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double mass = 0;
        for (std::size_t i = 0; i < p.docs.size(); ++i) mass += c.tf(t, p.docs[i]) * p.sims[i] / max_sim;
        double ictf = std::log10(1.0 / c.pc(t));
        s[t] = mass * ictf / (1 + ictf);
    }
    return s;
}

inline double old_idf(const Corpus& c, const std::string& t) {
    double nt = c.df(t);
    if (nt == 0) return 1.0;
    return std::min(std::log10(c.n() / nt) / 5.0, 1.0);
}

inline double robertson(const Corpus& c, const std::string& t) {
    double nt = c.df(t);
    return std::log10((c.n() - nt + 0.5) / (nt + 0.5));
}

inline Scores lca(const Corpus& c, const Prd& p, const std::vector<std::string>& q, double delta) {
    double n = static_cast<double>(p.docs.size());
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double total = 0;
        for (const auto& qi : q) {
            double co = 0;
            for (auto d : p.docs) co += c.tf(t, d) * c.tf(qi, d);
            double codeg = n == 1 ? 0.0 : std::log10(co + 1) * old_idf(c, t) / std::log10(n);
            total += old_idf(c, qi) * std::log10(delta + codeg);
        }
        s[t] = total;
    }
    return s;
}

inline Scores lcanew(const Corpus& c, const Prd& p, const std::vector<std::string>& q, double delta) {
    double n = static_cast<double>(p.docs.size());
    double max_sim = *std::max_element(p.sims.begin(), p.sims.end());
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double total = 0;
        for (const auto& qi : q) {
            double co = 0;
            for (std::size_t i = 0; i < p.docs.size(); ++i) {
                double a = c.tf(t, p.docs[i]);
                double b = c.tf(qi, p.docs[i]);
                double idf;
                if (a < b) {
                    idf = robertson(c, t);
                } else if (b < a) {
                    idf = robertson(c, qi);
                } else {
                    idf = std::min(robertson(c, t), robertson(c, qi));
                }
                co += std::min(a, b) * std::max(idf, 0.0) * p.sims[i] / max_sim;
            }
            double codeg = n == 1 ? 0.0 : std::log10(co + 1) / std::log10(n);
            total += robertson(c, qi) * std::log10(delta + codeg);
        }
        s[t] = total;
    }
    return s;
}

inline Scores rm3(const Corpus& c, const Prd& p, const std::vector<std::string>& q, double mu) {
    Scores s;
    for (const auto& t : vocabulary(c, p)) {
        double sum = 0;
        for (auto d : p.docs) {
            double prod = 1;
            for (const auto& qi : q) prod *= (c.tf(qi, d) + mu * c.pc(qi)) / (c.len(d) + mu);
            sum += c.tf(t, d) / c.len(d) * prod;
        }
        s[t] = sum / static_cast<double>(p.docs.size());
    }
    return s;
}

// --- metrics ---------------------------------------------------------------

inline double ap(const std::vector<std::string>& ranking, const std::set<std::string>& rel) {
    double hits = 0, sum = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (rel.count(ranking[i])) {
            hits += 1;
            sum += hits / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(rel.size());
}

inline double p_at(const std::vector<std::string>& ranking, const std::set<std::string>& rel, std::size_t k) {
    double hits = 0;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i) hits += rel.count(ranking[i]) ? 1 : 0;
    return hits / static_cast<double>(k);
}

inline double recall(const std::vector<std::string>& ranking, const std::set<std::string>& rel) {
    double hits = 0;
    for (const auto& d : ranking) hits += rel.count(d) ? 1 : 0;
    return hits / static_cast<double>(rel.size());
}

}  // namespace oracle
