#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "qexp/error.hpp"
#include "qexp/expansion.hpp"
#include "qexp/retrieval.hpp"

namespace qexp {

/// Select-and-weight with a distribution method, refine with an association
/// method.
struct CombinationParams {
    Method distribution = Method::kld;   // kld or bo1new
    Method association = Method::lcanew; // lcanew or rm3
    std::size_t feedback_docs = 10;      // D: PRD for the distribution step
    std::size_t candidates = 100;        // T: distribution candidates kept
    std::size_t association_docs = 50;   // D': PRD for association scoring
    std::size_t final_terms = 40;        // T': terms in the expanded query
    double delta = 0.1;
    double mu = 2500.0;
    double kld_log_base = std::numbers::e;
    bool rerank = true;  // false keeps the distribution top T' directly

    void validate() const {
        if (distribution != Method::kld && distribution != Method::bo1new) {
            throw InvalidArgument("combination distribution method must be kld or bo1new");
        }
        if (association != Method::lcanew && association != Method::rm3) {
            throw InvalidArgument("combination association method must be lcanew or rm3");
        }
        if (feedback_docs < 1 || candidates < 1 || association_docs < 1 || final_terms < 1) {
            throw InvalidArgument("combination sizes must be at least 1");
        }
        if (final_terms > candidates) {
            throw InvalidArgument("T' must not exceed T");
        }
        if (feedback_docs > association_docs) {
            throw InvalidArgument("D must not exceed D'");
        }
        if (!(delta > 0.0) || !(mu > 0.0)) {
            throw InvalidArgument("delta and mu must be positive");
        }
    }

    [[nodiscard]] ExpansionParams distribution_params() const {
        ExpansionParams p;
        p.feedback_docs = feedback_docs;
        p.expansion_terms = candidates;
        p.delta = delta;
        p.mu = mu;
        p.kld_log_base = kld_log_base;
        return p;
    }

    [[nodiscard]] ExpansionParams association_params() const {
        ExpansionParams p = distribution_params();
        p.feedback_docs = association_docs;
        p.expansion_terms = final_terms;
        return p;
    }
};

/// Per-query trace of the three combination steps.
struct CombinationAudit {
    std::string query_id;
    double kld_log_base = std::numbers::e;    // units for reported KLD scores
    std::vector<CandidateTerm> distribution;  // step 1: top T, distribution scores
    std::vector<CandidateTerm> association;   // step 2: same terms, association scores
    std::vector<CandidateTerm> selected;      // step 3: kept T', distribution scores
};

struct CombinationResult {
    WeightedQuery query;
    CombinationAudit audit;
    bool degraded = false;
    std::vector<std::string> warnings;
};

/// Runs the combination on an existing first-pass ranking, which must hold
/// at least max(D, D') documents when that many were retrievable.
inline CombinationResult combine_from_ranking(const AnalyzedQuery& query, std::span<const ScoredDoc> ranking,
                                              const CorpusIndex& index, const CombinationParams& params) {
    params.validate();
    CombinationResult result;
    result.audit.query_id = query.query_id;
    result.audit.kld_log_base = params.kld_log_base;

    auto prd = feedback_from_ranking(ranking, params.feedback_docs, index);
    if (prd.empty()) {
        result.query = original_query(query);
        result.degraded = true;
        result.warnings.push_back("query " + query.query_id + ": no documents retrieved, expansion skipped");
        return result;
    }

    // (1) distribution candidates and their weights
    auto dist_params = params.distribution_params();
    auto dist = top_candidates(score_candidates(params.distribution, prd, query.terms, index, dist_params),
                               params.candidates);
    result.audit.distribution = dist;

    // (2) association scores over the larger pool, for those candidates only
    std::vector<std::size_t> order(dist.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    if (params.rerank) {
        auto pool = feedback_from_ranking(ranking, params.association_docs, index);
        if (params.association == Method::lcanew && pool.size() == 1) {
            result.warnings.push_back("query " + query.query_id +
                                      ": single feedback document, LCA codegree defined as 0");
        }
        std::vector<TermId> ids;
        ids.reserve(dist.size());
        for (const auto& c : dist) {
            ids.push_back(c.id);
        }
        auto assoc = score_candidates(params.association, pool, query.terms, index, params.association_params(), ids);
        std::map<TermId, double> assoc_score;
        for (const auto& c : assoc) {
            assoc_score[c.id] = c.raw_score;
        }
        // Keep audit entries in distribution order.
        for (const auto& c : dist) {
            result.audit.association.push_back({c.term, c.id, assoc_score[c.id], params.association});
        }
        // (3) best association score first; ties keep distribution rank
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return result.audit.association[a].raw_score > result.audit.association[b].raw_score;
        });
    }
    order.resize(std::min(order.size(), params.final_terms));
    for (auto i : order) {
        result.audit.selected.push_back(dist[i]);
    }

    // (4) distribution weights, normalized against the full candidate pool
    std::optional<double> normalizer;
    if (!dist.empty()) {
        normalizer = dist.front().raw_score;
    }
    auto merged = merge_additive(query, result.audit.selected, normalizer);
    result.query = std::move(merged.query);
    if (merged.degenerate) {
        result.degraded = true;
        result.warnings.push_back("query " + query.query_id + ": no positive distribution scores, original query kept");
    }
    return result;
}

inline CombinationResult combine_expand(const AnalyzedQuery& query, const CorpusIndex& index,
                                        const CombinationParams& params, const RetrievalModel& model = {}) {
    params.validate();
    auto depth = std::max(params.feedback_docs, params.association_docs);
    auto ranking = retrieve(original_query(query), index, depth, model);
    return combine_from_ranking(query, ranking, index, params);
}

inline nlohmann::json audit_to_json(const CombinationAudit& audit) {
    double kld_scale = audit.kld_log_base == std::numbers::e ? 1.0 : 1.0 / std::log(audit.kld_log_base);
    auto list = [&](const std::vector<CandidateTerm>& terms) {
        auto arr = nlohmann::json::array();
        for (const auto& c : terms) {
            double score = c.method == Method::kld ? c.raw_score * kld_scale : c.raw_score;
            arr.push_back({{"term", c.term}, {"score", score}, {"method", method_name(c.method)}});
        }
        return arr;
    };
    return {{"query_id", audit.query_id},
            {"candidates", list(audit.distribution)},
            {"association", list(audit.association)},
            {"selected", list(audit.selected)}};
}

// ---------------------------------------------------------------------------
// Run matrix

/// One row of an experiment: no feedback, a single method, or a combination.
struct RunConfig {
    enum class Kind { baseline, single, combination };
    std::string name;
    Kind kind = Kind::baseline;
    Method method = Method::kld;
    ExpansionParams expansion;
    CombinationParams combination;
};

inline RunConfig baseline_config() {
    return {"baseline", RunConfig::Kind::baseline, Method::kld, {}, {}};
}

inline RunConfig single_config(Method m) {
    RunConfig c;
    c.name = std::string(method_name(m));
    c.kind = RunConfig::Kind::single;
    c.method = m;
    c.expansion = ExpansionParams::defaults_for(m);
    return c;
}

inline RunConfig combination_config(Method distribution, Method association) {
    RunConfig c;
    c.name = std::string(distribution == Method::kld ? "kld" : "bo1") +
             (association == Method::lcanew ? "lca" : "rm3");
    c.kind = RunConfig::Kind::combination;
    c.combination.distribution = distribution;
    c.combination.association = association;
    return c;
}

/// The no-feedback baseline, the six single methods and the four
/// combinations, with their default parameters.
inline std::vector<RunConfig> standard_run_configs() {
    std::vector<RunConfig> configs{baseline_config()};
    for (auto m : {Method::kld, Method::bo1, Method::bo1new, Method::lca, Method::lcanew, Method::rm3}) {
        configs.push_back(single_config(m));
    }
    for (auto d : {Method::kld, Method::bo1new}) {
        for (auto a : {Method::lcanew, Method::rm3}) {
            configs.push_back(combination_config(d, a));
        }
    }
    return configs;
}

/// Final ranking for one query under one config, plus audit/warnings.
struct QueryRun {
    std::vector<ScoredDoc> ranking;
    WeightedQuery query;
    std::optional<CombinationAudit> audit;
    std::vector<std::string> warnings;
};

inline QueryRun run_query(const AnalyzedQuery& query, const CorpusIndex& index, const RunConfig& config,
                          std::size_t depth, const RetrievalModel& model) {
    QueryRun out;
    auto initial = original_query(query);
    switch (config.kind) {
    case RunConfig::Kind::baseline:
        out.query = initial;
        break;
    case RunConfig::Kind::single: {
        config.expansion.validate();
        auto first = retrieve(initial, index, config.expansion.feedback_docs, model);
        auto r = expand_from_ranking(query, first, index, config.method, config.expansion);
        out.query = std::move(r.query);
        out.warnings = std::move(r.warnings);
        break;
    }
    case RunConfig::Kind::combination: {
        auto r = combine_expand(query, index, config.combination, model);
        out.query = std::move(r.query);
        out.audit = std::move(r.audit);
        out.warnings = std::move(r.warnings);
        break;
    }
    }
    if (!out.query.terms.empty()) {
        out.ranking = retrieve(out.query, index, depth, model);
    }
    return out;
}

struct RunOutput {
    std::string run;          // TREC run file contents
    std::string audit_jsonl;  // combinations only
    std::vector<std::string> warnings;
    std::vector<QueryRun> queries;  // in input query order; empty ranking for skipped queries
};

/// Runs every config over every query. Queries are processed on up to
/// `threads` workers (0 = hardware concurrency); output order is always the
/// input query order, so results are identical for any thread count.
inline std::map<std::string, RunOutput> run_matrix(const std::vector<AnalyzedQuery>& queries,
                                                   const CorpusIndex& index, const std::vector<RunConfig>& configs,
                                                   std::size_t depth = 1000, const RetrievalModel& model = {},
                                                   unsigned threads = 0) {
    if (configs.empty()) {
        throw InvalidArgument("run_matrix: no run configurations");
    }
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    std::map<std::string, RunOutput> outputs;
    for (const auto& config : configs) {
        if (outputs.contains(config.name)) {
            throw InvalidArgument("duplicate run name: " + config.name);
        }
        std::vector<QueryRun> per_query(queries.size());
        std::vector<std::string> errors(queries.size());
        auto work = [&](std::size_t i) {
            try {
                per_query[i] = run_query(queries[i], index, config, depth, model);
            } catch (const std::exception& e) {
                errors[i] = "query " + queries[i].query_id + " skipped in run " + config.name + ": " + e.what();
            }
        };
        unsigned n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, queries.size()));
        if (n_workers <= 1) {
            for (std::size_t i = 0; i < queries.size(); ++i) {
                work(i);
            }
        } else {
            std::vector<std::jthread> workers;
            for (unsigned w = 0; w < n_workers; ++w) {
                workers.emplace_back([&, w] {
                    for (std::size_t i = w; i < queries.size(); i += n_workers) {
                        work(i);
                    }
                });
            }
        }

        RunOutput out;
        std::ostringstream run;
        std::ostringstream audit;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            if (!errors[i].empty()) {
                out.warnings.push_back(errors[i]);
                continue;
            }
            write_run(run, queries[i].query_id, per_query[i].ranking, config.name);
            if (per_query[i].audit) {
                audit << audit_to_json(*per_query[i].audit).dump() << '\n';
            }
            for (auto& w : per_query[i].warnings) {
                out.warnings.push_back(std::move(w));
            }
        }
        out.run = run.str();
        out.audit_jsonl = audit.str();
        out.queries = std::move(per_query);
        outputs.emplace(config.name, std::move(out));
    }
    return outputs;
}

}  // namespace qexp
