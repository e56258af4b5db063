#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/error.hpp"
#include "qexp/index.hpp"
#include "qexp/retrieval.hpp"

namespace qexp {

/// Candidate-term scorers. kld, bo1 and bo1new are distribution based; lca,
/// lcanew and rm3 are association based.
enum class Method { kld, bo1, bo1new, lca, lcanew, rm3 };

inline constexpr std::string_view method_name(Method m) {
    switch (m) {
    case Method::kld:
        return "kld";
    case Method::bo1:
        return "bo1";
    case Method::bo1new:
        return "bo1new";
    case Method::lca:
        return "lca";
    case Method::lcanew:
        return "lcanew";
    case Method::rm3:
        return "rm3";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
    for (auto m : {Method::kld, Method::bo1, Method::bo1new, Method::lca, Method::lcanew, Method::rm3}) {
        if (method_name(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

struct CandidateTerm {
    std::string term;
    TermId id = 0;
    double raw_score = 0.0;  // S(t)
    Method method = Method::kld;
};

struct ExpansionParams {
    std::size_t feedback_docs = 10;  // D
    std::size_t expansion_terms = 40;  // T
    double delta = 0.1;   // LCA floor
    double mu = 2500.0;   // RM3 Dirichlet smoothing
    double alpha = 0.5;   // RM3 interpolation
    // Units of reported KLD scores (audit output). Selection and weights are
    // computed in natural-log units: changing the base only rescales S(t), so
    // keeping it out of the arithmetic makes the expanded query exactly
    // independent of it.
    double kld_log_base = std::numbers::e;

    void validate() const {
        if (feedback_docs < 1) {
            throw InvalidArgument("D must be at least 1");
        }
        if (expansion_terms < 1) {
            throw InvalidArgument("T must be at least 1");
        }
        if (!(delta > 0.0)) {
            throw InvalidArgument("delta must be positive");
        }
        if (!(mu > 0.0)) {
            throw InvalidArgument("mu must be positive");
        }
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw InvalidArgument("alpha must lie in [0, 1]");
        }
        if (!(kld_log_base > 1.0)) {
            throw InvalidArgument("KLD log base must exceed 1");
        }
    }

    /// Per-method defaults: D=10, T=40, except RM3 which uses D=50, T=50.
    static ExpansionParams defaults_for(Method m) {
        ExpansionParams p;
        if (m == Method::rm3) {
            p.feedback_docs = 50;
            p.expansion_terms = 50;
        }
        return p;
    }
};

/// Sorts candidates best first: S(t) descending, then term ascending.
inline void rank_candidates(std::vector<CandidateTerm>& candidates) {
    std::sort(candidates.begin(), candidates.end(), [](const CandidateTerm& a, const CandidateTerm& b) {
        if (a.raw_score != b.raw_score) {
            return a.raw_score > b.raw_score;
        }
        return a.term < b.term;
    });
}

inline std::vector<CandidateTerm> top_candidates(std::vector<CandidateTerm> ranked, std::size_t n) {
    if (ranked.size() > n) {
        ranked.resize(n);
    }
    return ranked;
}

namespace detail {

template <typename ScoreFn>
std::vector<CandidateTerm> score_all(std::span<const TermId> vocab, const CorpusIndex& index, Method method,
                                     ScoreFn&& score) {
    std::vector<CandidateTerm> out;
    out.reserve(vocab.size());
    for (auto t : vocab) {
        out.push_back({index.term(t).term, t, score(t), method});
    }
    rank_candidates(out);
    return out;
}

// Sum of tf(t, d) over the PRD for every term in the PRD vocabulary.
inline std::map<TermId, double> prd_term_mass(const PseudoRelevantSet& prd, bool sim_scaled) {
    std::map<TermId, double> mass;
    double max_sim = prd.max_sim();
    for (const auto& d : prd.docs) {
        double scale = sim_scaled ? d.sim / max_sim : 1.0;
        for (const auto& dt : d.terms) {
            mass[dt.term] += dt.tf * scale;
        }
    }
    return mass;
}

// Original LCA idf: min(log10(N / N_t) / 5, 1). N_t = 0 saturates at 1.
inline double lca_idf(double n_docs, double doc_freq) {
    if (doc_freq <= 0.0) {
        return 1.0;
    }
    return std::min(std::log10(n_docs / doc_freq) / 5.0, 1.0);
}

// Robertson idf: log10((N - N_t + 0.5) / (N_t + 0.5)).
inline double robertson_idf(double n_docs, double doc_freq) {
    return std::log10((n_docs - doc_freq + 0.5) / (doc_freq + 0.5));
}

struct QueryTermInfo {
    std::optional<TermId> id;
    double idf = 0.0;
};

}  // namespace detail

/// KLD: S(t) = p_r(t) * log(p_r(t) / p_c(t)), where p_r is the term's share
/// of all PRD tokens and p_c its share of collection tokens. Natural log
/// unless `log_base` says otherwise.
inline std::vector<CandidateTerm> score_kld(const PseudoRelevantSet& prd, const CorpusIndex& index,
                                            std::span<const TermId> vocab,
                                            double log_base = std::numbers::e) {
    double prd_tokens = 0.0;
    for (const auto& d : prd.docs) {
        prd_tokens += d.length;
    }
    auto mass = detail::prd_term_mass(prd, false);
    bool natural = log_base == std::numbers::e;
    double log_b = std::log(log_base);
    return detail::score_all(vocab, index, Method::kld, [&](TermId t) {
        double pr = mass[t] / prd_tokens;
        double pc = index.collection_probability(t);
        double l = std::log(pr / pc);
        return natural ? pr * l : pr * (l / log_b);
    });
}

inline std::vector<CandidateTerm> score_kld(const PseudoRelevantSet& prd, const CorpusIndex& index,
                                            double log_base = std::numbers::e) {
    auto vocab = prd.vocabulary();
    return score_kld(prd, index, vocab, log_base);
}

/// Bo1: S(t) = sum_PRD tf(t,d) * log2((1 + f) / f) + log2(1 + f), with
/// f = cf(t) / N.
inline std::vector<CandidateTerm> score_bo1(const PseudoRelevantSet& prd, const CorpusIndex& index,
                                            std::span<const TermId> vocab) {
    auto mass = detail::prd_term_mass(prd, false);
    double n = index.num_docs();
    return detail::score_all(vocab, index, Method::bo1, [&](TermId t) {
        double f = static_cast<double>(index.term(t).cf) / n;
        return mass[t] * std::log2((1.0 + f) / f) + std::log2(1.0 + f);
    });
}

inline std::vector<CandidateTerm> score_bo1(const PseudoRelevantSet& prd, const CorpusIndex& index) {
    auto vocab = prd.vocabulary();
    return score_bo1(prd, index, vocab);
}

/// Modified Bo1: PRD term frequencies scaled by Sim(d,Q) / max Sim, times
/// ictf / (1 + ictf) with ictf = log10(1 / p_c(t)).
inline std::vector<CandidateTerm> score_bo1new(const PseudoRelevantSet& prd, const CorpusIndex& index,
                                               std::span<const TermId> vocab) {
    auto mass = detail::prd_term_mass(prd, true);
    return detail::score_all(vocab, index, Method::bo1new, [&](TermId t) {
        double ictf = std::log10(1.0 / index.collection_probability(t));
        return mass[t] * (ictf / (1.0 + ictf));
    });
}

inline std::vector<CandidateTerm> score_bo1new(const PseudoRelevantSet& prd, const CorpusIndex& index) {
    auto vocab = prd.vocabulary();
    return score_bo1new(prd, index, vocab);
}

/// Original LCA.
///
///   idf_t          = min(log10(N / N_t) / 5, 1)
///   co(t, q)       = sum_PRD tf(t,d) * tf(q,d)
///   codegree(t, q) = log10(co + 1) * idf_t / log10(n)
///   S(t)           = sum_i idf_{q_i} * log10(delta + codegree(t, q_i))
///
/// `query_terms` are iterated with their multiplicity. With a single PRD
/// document (log10(n) = 0) codegree is defined as 0.
inline std::vector<CandidateTerm> score_lca(const PseudoRelevantSet& prd, std::span<const std::string> query_terms,
                                            const CorpusIndex& index, double delta,
                                            std::span<const TermId> vocab) {
    double n_docs = index.num_docs();
    double log_n = std::log10(static_cast<double>(prd.size()));
    std::vector<detail::QueryTermInfo> query;
    for (const auto& q : query_terms) {
        auto id = index.find(q);
        query.push_back({id, detail::lca_idf(n_docs, id ? index.term(*id).df : 0)});
    }
    return detail::score_all(vocab, index, Method::lca, [&](TermId t) {
        double idf_t = detail::lca_idf(n_docs, index.term(t).df);
        double s = 0.0;
        for (const auto& q : query) {
            double co = 0.0;
            if (q.id) {
                for (const auto& d : prd.docs) {
                    co += static_cast<double>(tf_in(d, t)) * tf_in(d, *q.id);
                }
            }
            double codegree = log_n > 0.0 ? std::log10(co + 1.0) * idf_t / log_n : 0.0;
            s += q.idf * std::log10(delta + codegree);
        }
        return s;
    });
}

inline std::vector<CandidateTerm> score_lca(const PseudoRelevantSet& prd, std::span<const std::string> query_terms,
                                            const CorpusIndex& index, double delta = 0.1) {
    auto vocab = prd.vocabulary();
    return score_lca(prd, query_terms, index, delta, vocab);
}

/// Modified LCA. Co-occurrence in a document counts at most the smaller of
/// the two frequencies, is weighted by the (clamped) Robertson idf of the
/// term holding that minimum, and by the document's normalized similarity.
///
///   co(t, q)       = sum_PRD min(tf(t,d), tf(q,d)) * max(idf_{t|q}, 0) * Sim(d)/max Sim
///   codegree(t, q) = log10(co + 1) / log10(n)
///   S(t)           = sum_i idf_{q_i} * log10(delta + codegree(t, q_i))
///
/// All idf values use the Robertson form. When tf(t,d) = tf(q,d) the smaller
/// of the two idfs is used.
inline std::vector<CandidateTerm> score_lcanew(const PseudoRelevantSet& prd,
                                               std::span<const std::string> query_terms,
                                               const CorpusIndex& index, double delta,
                                               std::span<const TermId> vocab) {
    double n_docs = index.num_docs();
    double log_n = std::log10(static_cast<double>(prd.size()));
    double max_sim = prd.max_sim();
    std::vector<detail::QueryTermInfo> query;
    for (const auto& q : query_terms) {
        auto id = index.find(q);
        query.push_back({id, detail::robertson_idf(n_docs, id ? index.term(*id).df : 0)});
    }
    return detail::score_all(vocab, index, Method::lcanew, [&](TermId t) {
        double idf_t = detail::robertson_idf(n_docs, index.term(t).df);
        double s = 0.0;
        for (const auto& q : query) {
            double co = 0.0;
            if (q.id) {
                for (const auto& d : prd.docs) {
                    auto tf_t = tf_in(d, t);
                    auto tf_q = tf_in(d, *q.id);
                    auto m = std::min(tf_t, tf_q);
                    if (m == 0) {
                        continue;
                    }
                    double idf = tf_t < tf_q ? idf_t : tf_q < tf_t ? q.idf : std::min(idf_t, q.idf);
                    co += m * std::max(idf, 0.0) * (d.sim / max_sim);
                }
            }
            double codegree = log_n > 0.0 ? std::log10(co + 1.0) / log_n : 0.0;
            s += q.idf * std::log10(delta + codegree);
        }
        return s;
    });
}

inline std::vector<CandidateTerm> score_lcanew(const PseudoRelevantSet& prd,
                                               std::span<const std::string> query_terms,
                                               const CorpusIndex& index, double delta = 0.1) {
    auto vocab = prd.vocabulary();
    return score_lcanew(prd, query_terms, index, delta, vocab);
}

/// RM3 with i.i.d. sampling and a uniform document prior:
///
///   S(t) = 1/|PRD| * sum_PRD tf(t,d)/|d| * prod_i (tf(q_i,d) + mu p_c(q_i)) / (|d| + mu)
///
/// Query terms absent from the index are left out of the product (their
/// factor would be identically zero).
inline std::vector<CandidateTerm> score_rm3(const PseudoRelevantSet& prd, std::span<const std::string> query_terms,
                                            const CorpusIndex& index, double mu, std::span<const TermId> vocab) {
    std::vector<std::pair<TermId, double>> query;
    for (const auto& q : query_terms) {
        if (auto id = index.find(q)) {
            query.emplace_back(*id, index.collection_probability(*id));
        }
    }
    // Query likelihood of each PRD document, including the 1/|PRD| prior.
    std::vector<double> doc_weight;
    doc_weight.reserve(prd.size());
    for (const auto& d : prd.docs) {
        double len = d.length;
        double w = 1.0 / static_cast<double>(prd.size());
        for (const auto& [q, pc] : query) {
            w *= (tf_in(d, q) + mu * pc) / (len + mu);
        }
        doc_weight.push_back(w);
    }
    return detail::score_all(vocab, index, Method::rm3, [&](TermId t) {
        double s = 0.0;
        for (std::size_t i = 0; i < prd.docs.size(); ++i) {
            const auto& d = prd.docs[i];
            auto tf = tf_in(d, t);
            if (tf > 0) {
                s += static_cast<double>(tf) / d.length * doc_weight[i];
            }
        }
        return s;
    });
}

inline std::vector<CandidateTerm> score_rm3(const PseudoRelevantSet& prd, std::span<const std::string> query_terms,
                                            const CorpusIndex& index, double mu = 2500.0) {
    auto vocab = prd.vocabulary();
    return score_rm3(prd, query_terms, index, mu, vocab);
}

/// Dispatches to the scorer for `method`, restricted to `vocab`.
inline std::vector<CandidateTerm> score_candidates(Method method, const PseudoRelevantSet& prd,
                                                   std::span<const std::string> query_terms,
                                                   const CorpusIndex& index, const ExpansionParams& params,
                                                   std::span<const TermId> vocab) {
    switch (method) {
    case Method::kld:
        return score_kld(prd, index, vocab);
    case Method::bo1:
        return score_bo1(prd, index, vocab);
    case Method::bo1new:
        return score_bo1new(prd, index, vocab);
    case Method::lca:
        return score_lca(prd, query_terms, index, params.delta, vocab);
    case Method::lcanew:
        return score_lcanew(prd, query_terms, index, params.delta, vocab);
    case Method::rm3:
        return score_rm3(prd, query_terms, index, params.mu, vocab);
    }
    throw InvalidArgument("unknown expansion method");
}

inline std::vector<CandidateTerm> score_candidates(Method method, const PseudoRelevantSet& prd,
                                                   std::span<const std::string> query_terms,
                                                   const CorpusIndex& index, const ExpansionParams& params) {
    auto vocab = prd.vocabulary();
    return score_candidates(method, prd, query_terms, index, params, vocab);
}

// ---------------------------------------------------------------------------
// Merging expansion terms into the original query

struct MergeResult {
    WeightedQuery query;
    bool degenerate = false;  // fell back to the original query
};

/// score_orig(t) = (1 + ln tf(t,Q)) / (1 + max_t' ln tf(t',Q)).
inline std::map<std::string, double> normalized_original_weights(const std::map<std::string, std::uint32_t>& tf) {
    double max_log = 0.0;
    for (const auto& [t, n] : tf) {
        max_log = std::max(max_log, std::log(static_cast<double>(n)));
    }
    std::map<std::string, double> w;
    for (const auto& [t, n] : tf) {
        w[t] = (1.0 + std::log(static_cast<double>(n))) / (1.0 + max_log);
    }
    return w;
}

/// Max-normalized additive merge: score(t) = score_orig(t) + S(t) / max S.
///
/// The normalizer defaults to the largest S among `candidates`; pass
/// `normalizer` to normalize against a larger pool. Candidates with S <= 0
/// get no expansion weight. If no candidate has positive S, the original
/// query is returned and the result is flagged degenerate.
inline MergeResult merge_additive(const AnalyzedQuery& original, std::span<const CandidateTerm> candidates,
                                  std::optional<double> normalizer = std::nullopt) {
    MergeResult r;
    double max_s = 0.0;
    for (const auto& c : candidates) {
        max_s = std::max(max_s, c.raw_score);
    }
    if (normalizer) {
        max_s = *normalizer;
    }
    if (!(max_s > 0.0)) {
        r.query = original_query(original);
        r.degenerate = true;
        return r;
    }
    r.query.query_id = original.query_id;
    r.query.original_tf = term_counts(original.terms);
    r.query.terms = normalized_original_weights(r.query.original_tf);
    for (const auto& c : candidates) {
        if (c.raw_score > 0.0) {
            r.query.terms[c.term] += c.raw_score / max_s;
        }
    }
    return r;
}

/// Rank-based merge of original LCA: the j-th best term (j from 0) receives
/// score_exp = 1 - 0.9 j / T, added to score_orig. `ranked` must be best first.
inline MergeResult merge_lca_rank(const AnalyzedQuery& original, std::span<const CandidateTerm> ranked,
                                  std::size_t expansion_terms) {
    if (expansion_terms < 1) {
        throw InvalidArgument("T must be at least 1");
    }
    MergeResult r;
    r.query.query_id = original.query_id;
    r.query.original_tf = term_counts(original.terms);
    r.query.terms = normalized_original_weights(r.query.original_tf);
    auto n = std::min(expansion_terms, ranked.size());
    for (std::size_t j = 0; j < n; ++j) {
        r.query.terms[ranked[j].term] += 1.0 - 0.9 * static_cast<double>(j) / static_cast<double>(expansion_terms);
    }
    return r;
}

/// RM3 interpolation: score(t) = alpha * S(t)/sum S + (1 - alpha) * tf(t,Q)/|Q|.
/// The sum runs over `candidates`. Terms whose interpolated weight is zero
/// are dropped. Zero total mass returns the original query, flagged.
inline MergeResult merge_rm3(const AnalyzedQuery& original, std::span<const CandidateTerm> candidates,
                             double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("alpha must lie in [0, 1]");
    }
    MergeResult r;
    double total = 0.0;
    for (const auto& c : candidates) {
        total += c.raw_score;
    }
    if (!(total > 0.0)) {
        r.query = original_query(original);
        r.degenerate = true;
        return r;
    }
    r.query.query_id = original.query_id;
    r.query.original_tf = term_counts(original.terms);
    std::map<std::string, double> w;
    double qlen = static_cast<double>(original.terms.size());
    for (const auto& [t, tf] : r.query.original_tf) {
        w[t] += (1.0 - alpha) * (tf / qlen);
    }
    for (const auto& c : candidates) {
        w[c.term] += alpha * (c.raw_score / total);
    }
    for (const auto& [t, weight] : w) {
        if (weight > 0.0) {
            r.query.terms.emplace(t, weight);
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Single-method expansion

struct ExpansionResult {
    WeightedQuery query;
    std::vector<CandidateTerm> selected;  // top-T candidates, best first
    bool degraded = false;                 // returned the original query
    std::vector<std::string> warnings;
};

/// Applies `method`'s merge scheme to an already-ranked candidate list.
inline MergeResult merge_for(Method method, const AnalyzedQuery& query, std::span<const CandidateTerm> selected,
                             const ExpansionParams& params) {
    switch (method) {
    case Method::lca:
        return merge_lca_rank(query, selected, params.expansion_terms);
    case Method::rm3:
        return merge_rm3(query, selected, params.alpha);
    default:
        return merge_additive(query, selected);
    }
}

/// Expansion from an existing first-pass ranking: PRD = top D, score,
/// keep top T, merge.
inline ExpansionResult expand_from_ranking(const AnalyzedQuery& query, std::span<const ScoredDoc> ranking,
                                           const CorpusIndex& index, Method method,
                                           const ExpansionParams& params) {
    params.validate();
    ExpansionResult result;
    auto prd = feedback_from_ranking(ranking, params.feedback_docs, index);
    if (prd.empty()) {
        result.query = original_query(query);
        result.degraded = true;
        result.warnings.push_back("query " + query.query_id + ": no documents retrieved, expansion skipped");
        return result;
    }
    if ((method == Method::lca || method == Method::lcanew) && prd.size() == 1) {
        result.warnings.push_back("query " + query.query_id +
                                  ": single feedback document, LCA codegree defined as 0");
    }
    auto ranked = score_candidates(method, prd, query.terms, index, params);
    result.selected = top_candidates(std::move(ranked), params.expansion_terms);
    auto merged = merge_for(method, query, result.selected, params);
    result.query = std::move(merged.query);
    if (merged.degenerate) {
        result.degraded = true;
        result.warnings.push_back("query " + query.query_id + ": no positive " +
                                  std::string(method_name(method)) + " scores, original query kept");
    }
    return result;
}

/// First-pass retrieval with the original query, then expansion.
inline ExpansionResult expand(const AnalyzedQuery& query, const CorpusIndex& index, Method method,
                              const ExpansionParams& params, const RetrievalModel& model = {}) {
    params.validate();
    auto ranking = retrieve(original_query(query), index, params.feedback_docs, model);
    return expand_from_ranking(query, ranking, index, method, params);
}

}  // namespace qexp
