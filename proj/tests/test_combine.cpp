#include <gtest/gtest.h>

#include <cmath>

#include "oracle.hpp"
#include "synthetic.hpp"
#include "qexp/combine.hpp"

using namespace qexp;

namespace {

struct OracleTerm {
    std::string term;
    double dist;
    double assoc;
};

// Straight-line combination: distribution top T over the top D, association
// scores over the top D' for those terms only, stable re-sort, keep T',
// weights from the distribution scores normalized by the best candidate.
std::map<std::string, double> oracle_combination(const oracle::Corpus& oc, const AnalyzedQuery& q,
                                                 const CombinationParams& p) {
    std::map<std::string, double> weights;
    for (const auto& t : q.terms) weights[t] += 1.0;
    std::map<std::string, double> qtf = weights;
    auto hits = oracle::rank(oc, weights);
    auto prd = oracle::top(hits, p.feedback_docs);
    if (prd.docs.empty()) return qtf;
    auto pool = oracle::top(hits, p.association_docs);
    auto dist = p.distribution == Method::kld ? oracle::kld(oc, prd) : oracle::bo1new(oc, prd);
    auto assoc = p.association == Method::lcanew ? oracle::lcanew(oc, pool, q.terms, p.delta)
                                                 : oracle::rm3(oc, pool, q.terms, p.mu);
    std::vector<OracleTerm> cands;
    for (const auto& [t, s] : dist) cands.push_back({t, s, assoc.count(t) ? assoc.at(t) : 0.0});
    std::sort(cands.begin(), cands.end(), [](const OracleTerm& a, const OracleTerm& b) {
        return a.dist != b.dist ? a.dist > b.dist : a.term < b.term;
    });
    if (cands.size() > p.candidates) cands.resize(p.candidates);
    double top = cands.front().dist;
    if (p.rerank) {
        std::stable_sort(cands.begin(), cands.end(),
                         [](const OracleTerm& a, const OracleTerm& b) { return a.assoc > b.assoc; });
    }
    if (cands.size() > p.final_terms) cands.resize(p.final_terms);
    double max_log = 0;
    for (const auto& [t, n] : qtf) max_log = std::max(max_log, std::log(n));
    std::map<std::string, double> out;
    for (const auto& [t, n] : qtf) out[t] = (1 + std::log(n)) / (1 + max_log);
    for (const auto& c : cands) {
        if (c.dist > 0) out[c.term] += c.dist / top;
    }
    return out;
}

CombinationParams small_params(Method d, Method a) {
    CombinationParams p;
    p.distribution = d;
    p.association = a;
    p.feedback_docs = 4;
    p.candidates = 20;
    p.association_docs = 12;
    p.final_terms = 8;
    return p;
}

std::set<std::string> terms_of(const std::vector<CandidateTerm>& c) {
    std::set<std::string> s;
    for (const auto& t : c) s.insert(t.term);
    return s;
}

}  // namespace

TEST(Combination, MatchesStraightLineOracle) {
    std::size_t checked = 0;
    for (std::uint64_t seed : {201, 202, 203}) {
        auto col = synth::random_collection(seed, 90, 120, 40, 6);
        auto idx = col.index();
        auto oc = col.oracle();
        for (auto d : {Method::kld, Method::bo1new}) {
            for (auto a : {Method::lcanew, Method::rm3}) {
                auto p = small_params(d, a);
                for (const auto& q : col.queries) {
                    auto got = combine_expand(q, idx, p).query.terms;
                    auto want = oracle_combination(oc, q, p);
                    ASSERT_EQ(got.size(), want.size()) << method_name(d) << "+" << method_name(a) << " q" << q.query_id;
                    for (const auto& [t, w] : want) {
                        ASSERT_TRUE(got.count(t)) << t;
                        EXPECT_NEAR(got.at(t), w, 1e-9) << t;
                    }
                    ++checked;
                }
            }
        }
    }
    EXPECT_EQ(checked, 72u);
}

TEST(Combination, SelectedIsSubsetOfCandidates) {
    auto col = synth::planted_collection();
    auto idx = col.index();
    for (auto a : {Method::lcanew, Method::rm3}) {
        CombinationParams p;
        p.association = a;
        for (std::size_t i = 0; i < 5; ++i) {
            auto r = combine_expand(col.queries[i], idx, p);
            const auto& audit = r.audit;
            EXPECT_EQ(audit.distribution.size(), p.candidates);
            EXPECT_EQ(audit.association.size(), p.candidates);
            EXPECT_EQ(audit.selected.size(), p.final_terms);
            auto pool = terms_of(audit.distribution);
            for (const auto& s : audit.selected) EXPECT_TRUE(pool.count(s.term)) << s.term;
            // association entries align with candidates, in distribution order
            for (std::size_t k = 0; k < audit.distribution.size(); ++k) {
                EXPECT_EQ(audit.association[k].term, audit.distribution[k].term);
                EXPECT_EQ(audit.association[k].method, a);
            }
            // selected terms carry distribution scores, ordered by association
            std::map<std::string, double> assoc;
            for (const auto& c : audit.association) assoc[c.term] = c.raw_score;
            for (std::size_t k = 1; k < audit.selected.size(); ++k) {
                EXPECT_GE(assoc[audit.selected[k - 1].term], assoc[audit.selected[k].term]);
            }
            for (const auto& s : audit.selected) EXPECT_EQ(s.method, Method::kld);
            // the T' best association scores were kept
            std::vector<double> sorted;
            for (const auto& c : audit.association) sorted.push_back(c.raw_score);
            std::sort(sorted.rbegin(), sorted.rend());
            EXPECT_EQ(assoc[audit.selected.back().term], sorted[p.final_terms - 1]);
        }
    }
}

TEST(Combination, WeightsComeFromDistributionScores) {
    auto col = synth::planted_collection();
    auto idx = col.index();
    CombinationParams p;
    const auto& q = col.queries[3];
    auto r = combine_expand(q, idx, p);
    double top = r.audit.distribution.front().raw_score;
    auto orig = normalized_original_weights(term_counts(q.terms));
    for (const auto& s : r.audit.selected) {
        double base = orig.count(s.term) ? orig.at(s.term) : 0.0;
        if (s.raw_score > 0) {
            EXPECT_NEAR(r.query.terms.at(s.term), base + s.raw_score / top, 1e-12) << s.term;
        }
    }
    for (const auto& [t, w] : orig) EXPECT_GE(r.query.terms.at(t), w);
    std::size_t expected = orig.size();
    for (const auto& s : r.audit.selected) {
        if (!orig.count(s.term) && s.raw_score > 0) ++expected;
    }
    EXPECT_EQ(r.query.terms.size(), expected);
}

TEST(Combination, FullPoolEqualsDistributionMethod) {
    // T' = T keeps every candidate, so the re-ranking cannot change the query.
    auto col = synth::planted_collection();
    auto idx = col.index();
    for (auto d : {Method::kld, Method::bo1new}) {
        CombinationParams p;
        p.distribution = d;
        p.candidates = 40;
        p.final_terms = 40;
        ExpansionParams e;
        e.feedback_docs = p.feedback_docs;
        e.expansion_terms = 40;
        for (std::size_t i = 0; i < 4; ++i) {
            auto c = combine_expand(col.queries[i], idx, p);
            auto s = expand(col.queries[i], idx, d, e);
            EXPECT_EQ(c.query.terms, s.query.terms);
        }
    }
}

TEST(Combination, NoRerankKeepsDistributionTop) {
    auto col = synth::planted_collection();
    auto idx = col.index();
    CombinationParams p;
    p.rerank = false;
    ExpansionParams e;
    e.feedback_docs = p.feedback_docs;
    e.expansion_terms = p.final_terms;
    auto c = combine_expand(col.queries[1], idx, p);
    EXPECT_TRUE(c.audit.association.empty());
    ASSERT_EQ(c.audit.selected.size(), p.final_terms);
    for (std::size_t k = 0; k < p.final_terms; ++k) EXPECT_EQ(c.audit.selected[k].term, c.audit.distribution[k].term);
    // Same terms as plain KLD with T = T'; the normalizer is the same top score.
    auto s = expand(col.queries[1], idx, Method::kld, e);
    EXPECT_EQ(c.query.terms, s.query.terms);
}

TEST(Combination, EqualAssociationKeepsDistributionOrder) {
    // Both candidate words never co-occur with the query in the pool, so their
    // association scores tie at the floor; the better distribution term wins.
    synth::Collection col;
    col.docs = {{"a", "q x x x y"}, {"b", "q x y y"}, {"c", "z"}, {"d", "w"}, {"e", "v"}, {"f", "u"}};
    auto idx = col.index();
    CombinationParams p;
    p.feedback_docs = 2;
    p.association_docs = 2;
    p.candidates = 3;
    p.final_terms = 2;
    auto r = combine_expand({"1", {"q"}}, idx, p);
    ASSERT_EQ(r.audit.distribution.size(), 3u);
    std::map<std::string, double> assoc;
    for (const auto& c : r.audit.association) assoc[c.term] = c.raw_score;
    ASSERT_EQ(assoc.at("x"), assoc.at("y"));
    std::vector<std::string> dist_order, selected;
    for (const auto& c : r.audit.distribution) {
        if (c.term != "q") dist_order.push_back(c.term);
    }
    for (const auto& c : r.audit.selected) {
        if (c.term != "q") selected.push_back(c.term);
    }
    ASSERT_FALSE(selected.empty());
    EXPECT_EQ(selected.front(), dist_order.front());
}

TEST(Combination, RejectsOffTopicTerm) {
    auto col = synth::off_topic_collection("papuc");
    auto idx = col.index();
    const auto& q = col.queries[0];
    ExpansionParams e;
    auto kld = expand(q, idx, Method::kld, e);
    EXPECT_TRUE(kld.query.terms.count("papuc"));
    CombinationParams p;
    auto comb = combine_expand(q, idx, p);
    EXPECT_TRUE(terms_of(comb.audit.distribution).count("papuc"));
    EXPECT_FALSE(comb.query.terms.count("papuc"));
}

TEST(Combination, EmptyFeedbackDegrades) {
    synth::Collection col;
    col.docs = {{"a", "x"}, {"b", "y"}};
    auto idx = col.index();
    auto r = combine_expand({"9", {"none"}}, idx, CombinationParams{});
    EXPECT_TRUE(r.degraded);
    EXPECT_EQ(r.query.terms, (std::map<std::string, double>{{"none", 1.0}}));
    EXPECT_EQ(r.warnings.size(), 1u);
    EXPECT_TRUE(r.audit.distribution.empty());
}

TEST(Combination, ParamValidation) {
    auto bad = [](auto mutate) {
        CombinationParams p;
        mutate(p);
        EXPECT_THROW(p.validate(), InvalidArgument);
    };
    EXPECT_NO_THROW(CombinationParams{}.validate());
    bad([](CombinationParams& p) { p.distribution = Method::bo1; });
    bad([](CombinationParams& p) { p.association = Method::lca; });
    bad([](CombinationParams& p) { p.final_terms = 101; });
    bad([](CombinationParams& p) { p.feedback_docs = 60; });
    bad([](CombinationParams& p) { p.candidates = 0; });
    bad([](CombinationParams& p) { p.mu = 0; });
    auto d = CombinationParams{};
    EXPECT_EQ(d.feedback_docs, 10u);
    EXPECT_EQ(d.candidates, 100u);
    EXPECT_EQ(d.association_docs, 50u);
    EXPECT_EQ(d.final_terms, 40u);
}

TEST(Audit, JsonShapeAndKldUnits) {
    auto col = synth::planted_collection();
    auto idx = col.index();
    CombinationParams p;
    auto r = combine_expand(col.queries[0], idx, p);
    auto j = audit_to_json(r.audit);
    EXPECT_EQ(j["query_id"], "1");
    ASSERT_EQ(j["candidates"].size(), 100u);
    ASSERT_EQ(j["association"].size(), 100u);
    ASSERT_EQ(j["selected"].size(), 40u);
    EXPECT_EQ(j["candidates"][0]["method"], "kld");
    EXPECT_EQ(j["association"][0]["method"], "lcanew");
    EXPECT_EQ(j["candidates"][0]["score"].get<double>(), r.audit.distribution[0].raw_score);

    p.kld_log_base = 2.0;
    auto r2 = combine_expand(col.queries[0], idx, p);
    EXPECT_EQ(r2.query.terms, r.query.terms);
    auto j2 = audit_to_json(r2.audit);
    for (std::size_t k = 0; k < 100; ++k) {
        EXPECT_EQ(j2["candidates"][k]["term"], j["candidates"][k]["term"]);
        EXPECT_NEAR(j2["candidates"][k]["score"].get<double>(),
                    j["candidates"][k]["score"].get<double>() / std::log(2.0), 1e-15);
        EXPECT_EQ(j2["association"][k]["score"], j["association"][k]["score"]);
    }
}

TEST(RunMatrix, StandardConfigs) {
    auto configs = standard_run_configs();
    std::vector<std::string> names;
    for (const auto& c : configs) names.push_back(c.name);
    EXPECT_EQ(names, (std::vector<std::string>{"baseline", "kld", "bo1", "bo1new", "lca", "lcanew", "rm3", "kldlca",
                                               "kldrm3", "bo1lca", "bo1rm3"}));
    EXPECT_EQ(configs[6].expansion.feedback_docs, 50u);
}

TEST(RunMatrix, ElevenRunsDeterministicAcrossThreads) {
    synth::PlantedOptions o;
    o.num_docs = 600;
    o.num_topics = 6;
    auto col = synth::planted_collection(o);
    auto idx = col.index();
    auto configs = standard_run_configs();
    auto one = run_matrix(col.queries, idx, configs, 100, {}, 1);
    auto many = run_matrix(col.queries, idx, configs, 100, {}, 4);
    ASSERT_EQ(one.size(), 11u);
    for (const auto& c : configs) {
        const auto& a = one.at(c.name);
        const auto& b = many.at(c.name);
        EXPECT_EQ(a.run, b.run) << c.name;
        EXPECT_EQ(a.audit_jsonl, b.audit_jsonl) << c.name;
        EXPECT_FALSE(a.run.empty());
        bool combination = c.kind == RunConfig::Kind::combination;
        EXPECT_EQ(!a.audit_jsonl.empty(), combination) << c.name;
        if (combination) EXPECT_EQ(std::count(a.audit_jsonl.begin(), a.audit_jsonl.end(), '\n'), 6);
    }
}

TEST(RunMatrix, BaselineEqualsDirectRetrieval) {
    auto col = synth::random_collection(210, 100, 80, 30, 5);
    auto idx = col.index();
    auto out = run_matrix(col.queries, idx, {baseline_config()}, 50, {}, 2);
    std::ostringstream expected;
    for (const auto& q : col.queries) write_run(expected, q.query_id, retrieve(original_query(q), idx, 50), "baseline");
    EXPECT_EQ(out.at("baseline").run, expected.str());
}

TEST(RunMatrix, FailingQueriesAreSkippedWithWarning) {
    auto col = synth::random_collection(211, 60, 50, 20, 3);
    auto idx = col.index();
    auto broken = single_config(Method::kld);
    broken.name = "broken";
    broken.expansion.feedback_docs = 0;
    auto out = run_matrix(col.queries, idx, {baseline_config(), broken}, 20, {}, 1);
    EXPECT_TRUE(out.at("broken").run.empty());
    ASSERT_EQ(out.at("broken").warnings.size(), 3u);
    EXPECT_NE(out.at("broken").warnings[0].find("query 1 skipped in run broken"), std::string::npos);
    EXPECT_FALSE(out.at("baseline").run.empty());
    EXPECT_TRUE(out.at("baseline").warnings.empty());
}

TEST(RunMatrix, RejectsDuplicateAndEmptyConfigs) {
    auto col = synth::random_collection(212, 20, 20, 10, 1);
    auto idx = col.index();
    EXPECT_THROW(run_matrix(col.queries, idx, {}), InvalidArgument);
    EXPECT_THROW(run_matrix(col.queries, idx, {baseline_config(), baseline_config()}), InvalidArgument);
}
