#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/error.hpp"
#include "qexp/index.hpp"

namespace qexp {

/// An analyzed query: its terms in order, duplicates kept.
struct AnalyzedQuery {
    std::string query_id;
    std::vector<std::string> terms;
};

/// A (possibly expanded) query ready for scoring.
struct WeightedQuery {
    std::string query_id;
    std::map<std::string, double> terms;               // term -> weight (> 0)
    std::map<std::string, std::uint32_t> original_tf;  // tf(t, Q) of the unexpanded query

    friend bool operator==(const WeightedQuery&, const WeightedQuery&) = default;
};

inline std::map<std::string, std::uint32_t> term_counts(std::span<const std::string> terms) {
    std::map<std::string, std::uint32_t> counts;
    for (const auto& t : terms) {
        ++counts[t];
    }
    return counts;
}

/// The unexpanded query: each distinct term weighted by tf(t, Q).
inline WeightedQuery original_query(const AnalyzedQuery& q) {
    WeightedQuery wq;
    wq.query_id = q.query_id;
    wq.original_tf = term_counts(q.terms);
    for (const auto& [t, tf] : wq.original_tf) {
        wq.terms.emplace(t, static_cast<double>(tf));
    }
    return wq;
}

struct ScoredDoc {
    std::string doc_id;
    DocOrdinal doc = 0;
    double score = 0.0;  // Sim(d, Q)

    friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Document weighting model. IFB2 is the default; BM25 is kept as a
/// cross-check scorer behind the same interface.
struct RetrievalModel {
    enum class Kind { ifb2, bm25 };
    Kind kind = Kind::ifb2;
    double c = 1.0;    // IFB2 length-normalization constant
    double k1 = 1.2;   // BM25
    double b = 0.75;   // BM25
};

/// IFB2 weight of a term with frequency `tf` in a document of length `doc_len`:
///
///   tfn = tf * log2(1 + c * avg_doc_len / doc_len)
///   w   = (cf + 1) / (df * (tfn + 1)) * tfn * log2((N + 1) / (cf + 0.5))
///
/// Zero when tf is zero.
inline double ifb2_weight(std::uint32_t tf, std::uint32_t doc_len, std::uint32_t df, std::uint64_t cf,
                          const CollectionStats& stats, double c) {
    if (tf == 0) {
        return 0.0;
    }
    double tfn = tf * std::log2(1.0 + c * stats.avg_doc_len / doc_len);
    double n = stats.num_docs;
    double f = static_cast<double>(cf);
    return (f + 1.0) / (df * (tfn + 1.0)) * tfn * std::log2((n + 1.0) / (f + 0.5));
}

inline double ifb2_weight(std::string_view term, DocOrdinal doc, const CorpusIndex& index, double c = 1.0) {
    auto id = index.find(term);
    if (!id) {
        return 0.0;
    }
    const auto& rec = index.term(*id);
    return ifb2_weight(index.tf(*id, doc), index.doc_len(doc), rec.df, rec.cf, index.stats(), c);
}

inline double bm25_weight(std::uint32_t tf, std::uint32_t doc_len, std::uint32_t df,
                          const CollectionStats& stats, double k1, double b) {
    if (tf == 0) {
        return 0.0;
    }
    double n = stats.num_docs;
    double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    double norm = k1 * (1.0 - b + b * doc_len / stats.avg_doc_len);
    return idf * tf * (k1 + 1.0) / (tf + norm);
}

inline double term_weight(const RetrievalModel& model, const CorpusIndex& index, TermId term,
                          std::uint32_t tf, DocOrdinal doc) {
    const auto& rec = index.term(term);
    switch (model.kind) {
    case RetrievalModel::Kind::bm25:
        return bm25_weight(tf, index.doc_len(doc), rec.df, index.stats(), model.k1, model.b);
    case RetrievalModel::Kind::ifb2:
    default:
        return ifb2_weight(tf, index.doc_len(doc), rec.df, rec.cf, index.stats(), model.c);
    }
}

/// Ranking order: score descending, then doc_id ascending.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.doc_id < b.doc_id;
}

/// Exhaustive term-at-a-time scoring: Sim(d,Q) = sum_t weight(t) * w(t,d).
/// Returns the top `k` documents with a strictly positive score.
inline std::vector<ScoredDoc> retrieve(const WeightedQuery& query, const CorpusIndex& index, std::size_t k,
                                       const RetrievalModel& model = {}) {
    if (k == 0) {
        throw InvalidArgument("retrieve: k must be at least 1");
    }
    std::vector<double> acc(index.num_docs(), 0.0);
    std::vector<DocOrdinal> touched;
    std::vector<char> seen(index.num_docs(), 0);
    for (const auto& [term, weight] : query.terms) {
        auto id = index.find(term);
        if (!id) {
            continue;
        }
        for (const auto& p : index.term(*id).postings) {
            acc[p.doc] += weight * term_weight(model, index, *id, p.tf, p.doc);
            if (!seen[p.doc]) {
                seen[p.doc] = 1;
                touched.push_back(p.doc);
            }
        }
    }
    std::vector<ScoredDoc> hits;
    hits.reserve(touched.size());
    for (auto d : touched) {
        if (acc[d] > 0.0) {
            hits.push_back({index.doc_id(d), d, acc[d]});
        }
    }
    auto top = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(top), hits.end(), ranks_before);
    hits.resize(top);
    return hits;
}

/// One pseudo-relevant document: its rank position, Sim(d,Q), and a view of
/// its term-frequency vector.
struct FeedbackDoc {
    DocOrdinal doc = 0;
    std::string doc_id;
    double sim = 0.0;
    std::uint32_t length = 0;
    std::span<const DocTerm> terms;
};

/// PRD: the top-ranked documents used for feedback, in rank order.
struct PseudoRelevantSet {
    std::vector<FeedbackDoc> docs;

    [[nodiscard]] bool empty() const { return docs.empty(); }
    [[nodiscard]] std::size_t size() const { return docs.size(); }

    [[nodiscard]] double max_sim() const {
        double m = 0.0;
        for (const auto& d : docs) {
            m = std::max(m, d.sim);
        }
        return m;
    }

    /// Distinct terms occurring in any PRD document, ascending by TermId.
    [[nodiscard]] std::vector<TermId> vocabulary() const {
        std::vector<TermId> vocab;
        for (const auto& d : docs) {
            for (const auto& dt : d.terms) {
                vocab.push_back(dt.term);
            }
        }
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        return vocab;
    }
};

inline std::uint32_t tf_in(const FeedbackDoc& d, TermId t) {
    auto it = std::lower_bound(d.terms.begin(), d.terms.end(), t,
                               [](const DocTerm& dt, TermId id) { return dt.term < id; });
    return it != d.terms.end() && it->term == t ? it->tf : 0;
}

/// Takes the first `depth` entries of an existing ranking as the PRD.
inline PseudoRelevantSet feedback_from_ranking(std::span<const ScoredDoc> ranking, std::size_t depth,
                                               const CorpusIndex& index) {
    PseudoRelevantSet prd;
    auto n = std::min(depth, ranking.size());
    prd.docs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& sd = ranking[i];
        prd.docs.push_back({sd.doc, sd.doc_id, sd.score, index.doc_len(sd.doc), index.doc_terms(sd.doc)});
    }
    return prd;
}

/// Retrieves with `query` and keeps the top `depth` documents as the PRD.
inline PseudoRelevantSet pseudo_relevant_set(const WeightedQuery& query, const CorpusIndex& index,
                                             std::size_t depth, const RetrievalModel& model = {}) {
    if (depth == 0) {
        throw InvalidArgument("pseudo_relevant_set: D must be at least 1");
    }
    auto ranking = retrieve(query, index, depth, model);
    return feedback_from_ranking(ranking, depth, index);
}

/// Formats a score with fixed six-decimal precision.
inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// TREC run lines: `query_id Q0 doc_id rank score run_tag`, ranks from 1.
inline void write_run(std::ostream& out, std::string_view query_id, std::span<const ScoredDoc> ranking,
                      std::string_view run_tag) {
    std::size_t rank = 1;
    for (const auto& sd : ranking) {
        out << query_id << " Q0 " << sd.doc_id << ' ' << rank++ << ' ' << format_fixed6(sd.score) << ' '
            << run_tag << '\n';
    }
}

}  // namespace qexp
