#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "synthetic.hpp"
#include "qexp/index.hpp"
#include "qexp/index_io.hpp"

using namespace qexp;
namespace fs = std::filesystem;

namespace {

CorpusIndex toy(std::vector<RawDocument> docs) { return build_index(docs, synth::raw_analyzer(), 1); }

fs::path temp_file(const std::string& name) { return fs::temp_directory_path() / ("qexp_" + name); }

void expect_same(const CorpusIndex& a, const CorpusIndex& b) {
    EXPECT_EQ(a.stats(), b.stats());
    ASSERT_EQ(a.vocabulary_size(), b.vocabulary_size());
    for (TermId t = 0; t < a.vocabulary_size(); ++t) EXPECT_EQ(a.term(t), b.term(t));
    ASSERT_EQ(a.num_docs(), b.num_docs());
    for (DocOrdinal d = 0; d < a.num_docs(); ++d) EXPECT_EQ(a.doc_id(d), b.doc_id(d));
    EXPECT_EQ(a.analyzer().stopwords, b.analyzer().stopwords);
    EXPECT_EQ(a.analyzer().stemmer, b.analyzer().stemmer);
    EXPECT_EQ(a.analyzer().lowercase, b.analyzer().lowercase);
}

}  // namespace

TEST(Index, ToyCounts) {
    auto idx = toy({{"d1", "a a b"}, {"d2", "a c"}});
    EXPECT_EQ(idx.num_docs(), 2u);
    EXPECT_EQ(idx.stats().total_tokens, 5u);
    auto a = idx.find("a");
    ASSERT_TRUE(a);
    EXPECT_EQ(idx.term(*a).term, "a");
    EXPECT_EQ(idx.term(*a).df, 2u);
    EXPECT_EQ(idx.term(*a).cf, 3u);
    EXPECT_DOUBLE_EQ(idx.stats().avg_doc_len, 2.5);
}

TEST(Index, CollectionProbability) {
    auto idx = toy({{"d1", "a a b"}, {"d2", "a c"}, {"d3", "b c c"}});
    EXPECT_DOUBLE_EQ(p_c(idx, "a"), 0.375);
    EXPECT_EQ(p_c(idx, "zzz"), 0.0);
    double sum = 0;
    for (TermId t = 0; t < idx.vocabulary_size(); ++t) sum += idx.collection_probability(t);
    EXPECT_DOUBLE_EQ(sum, 1.0);
}

TEST(Index, EmptyCollectionRejected) {
    EXPECT_THROW(build_index({}, AnalyzerConfig{}), BuildError);
    try {
        build_index({}, AnalyzerConfig{});
    } catch (const BuildError& e) {
        EXPECT_STREQ(e.what(), "empty collection");
    }
}

TEST(Index, SingleEmptyDocument) {
    auto idx = toy({{"only", ""}});
    EXPECT_EQ(idx.num_docs(), 1u);
    EXPECT_EQ(idx.stats().total_tokens, 0u);
    EXPECT_EQ(idx.vocabulary_size(), 0u);
}

TEST(Index, DuplicateIdNamed) {
    try {
        toy({{"x", "a"}, {"y", "b"}, {"x", "c"}});
        FAIL() << "expected BuildError";
    } catch (const BuildError& e) {
        EXPECT_NE(std::string(e.what()).find("x"), std::string::npos);
    }
}

TEST(Index, StatisticInvariants) {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto col = synth::random_collection(seed, 80, 120, 40, 0);
        auto idx = col.index();
        std::uint64_t cf_sum = 0;
        for (const auto& rec : idx.terms()) {
            cf_sum += rec.cf;
            EXPECT_GE(rec.df, 1u);
            EXPECT_LE(rec.df, idx.num_docs());
            EXPECT_LE(rec.df, rec.cf);
            for (std::size_t i = 1; i < rec.postings.size(); ++i) EXPECT_LT(rec.postings[i - 1].doc, rec.postings[i].doc);
        }
        EXPECT_EQ(cf_sum, idx.stats().total_tokens);
        std::uint64_t len_sum = 0;
        for (auto l : idx.stats().doc_len) len_sum += l;
        EXPECT_EQ(len_sum, idx.stats().total_tokens);
        EXPECT_DOUBLE_EQ(idx.stats().avg_doc_len, static_cast<double>(len_sum) / idx.num_docs());
    }
}

// Every posting, forward entry and doc length agrees with counting tokens.
TEST(Index, AgreesWithLinearScan) {
    auto col = synth::random_collection(9, 60, 80, 30, 0);
    auto idx = col.index();
    auto oc = col.oracle();
    std::set<std::string> vocab;
    for (const auto& d : oc.docs) vocab.insert(d.begin(), d.end());
    ASSERT_EQ(idx.vocabulary_size(), vocab.size());
    for (const auto& t : vocab) {
        EXPECT_EQ(idx.df(t), oc.df(t)) << t;
        EXPECT_EQ(idx.cf(t), oc.cf(t)) << t;
        auto id = *idx.find(t);
        for (std::size_t d = 0; d < oc.docs.size(); ++d) EXPECT_EQ(idx.tf(id, static_cast<DocOrdinal>(d)), oc.tf(t, d));
    }
    for (std::size_t d = 0; d < oc.docs.size(); ++d) {
        EXPECT_EQ(idx.doc_len(static_cast<DocOrdinal>(d)), oc.len(d));
        std::uint64_t fwd = 0;
        for (const auto& dt : idx.doc_terms(static_cast<DocOrdinal>(d))) fwd += dt.tf;
        EXPECT_EQ(fwd, oc.docs[d].size());
    }
}

TEST(Index, PermutationChangesOnlyOrdinals) {
    auto col = synth::random_collection(4, 50, 60, 25, 0);
    auto docs = col.docs;
    std::reverse(docs.begin(), docs.end());
    auto a = col.index();
    auto b = build_index(docs, synth::raw_analyzer(), 1);
    ASSERT_EQ(a.vocabulary_size(), b.vocabulary_size());
    for (TermId t = 0; t < a.vocabulary_size(); ++t) {
        EXPECT_EQ(a.term(t).term, b.term(t).term);
        EXPECT_EQ(a.term(t).df, b.term(t).df);
        EXPECT_EQ(a.term(t).cf, b.term(t).cf);
        std::map<std::string, std::uint32_t> pa, pb;
        for (const auto& p : a.term(t).postings) pa[a.doc_id(p.doc)] = p.tf;
        for (const auto& p : b.term(t).postings) pb[b.doc_id(p.doc)] = p.tf;
        EXPECT_EQ(pa, pb);
    }
    for (const auto& d : col.docs) {
        EXPECT_EQ(a.doc_len(*a.find_doc(d.doc_id)), b.doc_len(*b.find_doc(d.doc_id)));
    }
    EXPECT_EQ(a.stats().total_tokens, b.stats().total_tokens);
}

TEST(Index, ParallelBuildMatchesSequential) {
    auto col = synth::random_collection(5, 300, 200, 40, 0);
    auto seq = build_index(col.docs, AnalyzerConfig{}, 1);
    auto par = build_index(col.docs, AnalyzerConfig{}, 8);
    EXPECT_EQ(serialize_index(seq), serialize_index(par));
}

TEST(Index, SameTermStreamAsAnalyze) {
    AnalyzerConfig cfg;
    std::vector<RawDocument> docs{{"n1", "The Construction industries are constructing"}, {"n2", "Industrial action"}};
    auto idx = build_index(docs, cfg, 1);
    for (DocOrdinal d = 0; d < docs.size(); ++d) {
        std::map<std::string, std::uint32_t> expected;
        for (const auto& t : analyze(docs[d].text, cfg)) ++expected[t];
        std::map<std::string, std::uint32_t> got;
        for (const auto& dt : idx.doc_terms(d)) got[idx.term(dt.term).term] = dt.tf;
        EXPECT_EQ(got, expected);
    }
}

TEST(IndexIO, RoundTrip) {
    auto col = synth::random_collection(6, 40, 70, 30, 0);
    auto idx = build_index(col.docs, AnalyzerConfig{}, 1);
    auto path = temp_file("roundtrip.idx");
    save_index(idx, path);
    auto back = load_index(path);
    expect_same(idx, back);
    EXPECT_EQ(serialize_index(back), serialize_index(idx));
    fs::remove(path);
}

TEST(IndexIO, ToyRoundTripKeepsAnalyzer) {
    AnalyzerConfig cfg;
    cfg.stemmer = Stemmer::none;
    cfg.stopwords = {"custom"};
    auto idx = build_index({{"d1", "a a b custom"}, {"d2", "a c"}}, cfg, 1);
    auto back = deserialize_index(serialize_index(idx));
    expect_same(idx, back);
}

TEST(IndexIO, BadMagic) {
    auto bytes = serialize_index(toy({{"d", "x y"}}));
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_index(bytes), IndexFormatError);
    std::vector<char> tiny{'Q', 'E'};
    EXPECT_THROW(deserialize_index(tiny), IndexFormatError);
}

TEST(IndexIO, VersionMismatch) {
    auto bytes = serialize_index(toy({{"d", "x y"}}));
    bytes[8] = 2;
    EXPECT_THROW(deserialize_index(bytes), IndexVersionError);
}

TEST(IndexIO, Truncated) {
    auto bytes = serialize_index(toy({{"d", "x y z"}, {"e", "y"}}));
    for (std::size_t keep : {bytes.size() - 1, bytes.size() - 5, std::size_t{15}}) {
        std::vector<char> cut(bytes.begin(), bytes.begin() + static_cast<long>(keep));
        EXPECT_THROW(deserialize_index(cut), IndexTruncatedError) << keep;
    }
}

TEST(IndexIO, ChecksumMismatch) {
    auto bytes = serialize_index(toy({{"d", "x y"}}));
    bytes[25] ^= 0x01;
    EXPECT_THROW(deserialize_index(bytes), IndexChecksumError);
}

TEST(IndexIO, ErrorsAreDistinctTypes) {
    // Each integrity failure must be distinguishable by callers.
    EXPECT_FALSE((std::is_base_of_v<IndexChecksumError, IndexTruncatedError>));
    EXPECT_FALSE((std::is_base_of_v<IndexTruncatedError, IndexChecksumError>));
    EXPECT_FALSE((std::is_base_of_v<IndexVersionError, IndexFormatError>));
    EXPECT_TRUE((std::is_base_of_v<Error, IndexChecksumError>));
}

TEST(IndexIO, MissingFile) { EXPECT_THROW(load_index("/nonexistent/x.idx"), Error); }
