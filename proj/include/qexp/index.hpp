#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qexp/analyzer.hpp"
#include "qexp/error.hpp"
#include "qexp/trec_parser.hpp"

namespace qexp {

using TermId = std::uint32_t;
using DocOrdinal = std::uint32_t;

struct Posting {
    DocOrdinal doc = 0;
    std::uint32_t tf = 0;

    friend bool operator==(const Posting&, const Posting&) = default;
};

/// One vocabulary entry. df = postings.size(), cf = sum of posting tf.
struct TermRecord {
    std::string term;
    std::uint32_t df = 0;
    std::uint64_t cf = 0;
    std::vector<Posting> postings;

    friend bool operator==(const TermRecord&, const TermRecord&) = default;
};

/// Forward-index entry: a term and its frequency in one document.
struct DocTerm {
    TermId term = 0;
    std::uint32_t tf = 0;
};

struct CollectionStats {
    std::uint32_t num_docs = 0;
    std::uint64_t total_tokens = 0;
    std::vector<std::uint32_t> doc_len;
    double avg_doc_len = 0.0;

    friend bool operator==(const CollectionStats&, const CollectionStats&) = default;
};

/// Immutable inverted index with the collection statistics every scorer
/// needs (N, df, cf, |d|, token totals) and a per-document forward view.
///
/// Terms are stored in lexicographic order and a TermId is the position in
/// that order. Document ordinals follow input order.
class CorpusIndex {
  public:
    CorpusIndex() = default;

    /// Assembles an index from its persisted parts. `terms` must be sorted
    /// by term, each postings list strictly increasing in doc ordinal.
    CorpusIndex(std::vector<std::string> doc_ids, std::vector<std::uint32_t> doc_len,
                std::vector<TermRecord> terms, AnalyzerConfig analyzer = {})
        : analyzer_(std::move(analyzer)), doc_ids_(std::move(doc_ids)), terms_(std::move(terms)) {
        if (doc_ids_.size() != doc_len.size()) {
            throw BuildError("document id and length tables differ in size");
        }
        stats_.num_docs = static_cast<std::uint32_t>(doc_ids_.size());
        stats_.total_tokens = std::accumulate(doc_len.begin(), doc_len.end(), std::uint64_t{0});
        stats_.doc_len = std::move(doc_len);
        stats_.avg_doc_len =
            stats_.num_docs == 0 ? 0.0
                                 : static_cast<double>(stats_.total_tokens) / stats_.num_docs;

        doc_lookup_.reserve(doc_ids_.size());
        for (DocOrdinal d = 0; d < doc_ids_.size(); ++d) {
            if (!doc_lookup_.emplace(doc_ids_[d], d).second) {
                throw BuildError("duplicate doc_id: " + doc_ids_[d]);
            }
        }

        std::vector<std::uint32_t> fwd_count(doc_ids_.size(), 0);
        for (TermId t = 0; t < terms_.size(); ++t) {
            const auto& rec = terms_[t];
            if (t > 0 && !(terms_[t - 1].term < rec.term)) {
                throw BuildError("term dictionary not strictly sorted at: " + rec.term);
            }
            if (rec.df != rec.postings.size() || rec.postings.empty()) {
                throw BuildError("df does not match postings for term: " + rec.term);
            }
            std::uint64_t cf = 0;
            for (std::size_t i = 0; i < rec.postings.size(); ++i) {
                const auto& p = rec.postings[i];
                if (p.doc >= doc_ids_.size() || p.tf == 0 ||
                    (i > 0 && p.doc <= rec.postings[i - 1].doc)) {
                    throw BuildError("malformed postings for term: " + rec.term);
                }
                cf += p.tf;
                ++fwd_count[p.doc];
            }
            if (cf != rec.cf) {
                throw BuildError("cf does not match postings for term: " + rec.term);
            }
        }

        // Forward index, CSR layout; terms within a document ascend by TermId.
        fwd_offsets_.assign(doc_ids_.size() + 1, 0);
        for (std::size_t d = 0; d < fwd_count.size(); ++d) {
            fwd_offsets_[d + 1] = fwd_offsets_[d] + fwd_count[d];
        }
        fwd_terms_.resize(fwd_offsets_.back());
        std::vector<std::size_t> cursor(fwd_offsets_.begin(), fwd_offsets_.end() - 1);
        std::vector<std::uint64_t> tokens(doc_ids_.size(), 0);
        for (TermId t = 0; t < terms_.size(); ++t) {
            for (const auto& p : terms_[t].postings) {
                fwd_terms_[cursor[p.doc]++] = {t, p.tf};
                tokens[p.doc] += p.tf;
            }
        }
        for (DocOrdinal d = 0; d < doc_ids_.size(); ++d) {
            if (tokens[d] != stats_.doc_len[d]) {
                throw BuildError("document length disagrees with postings: " + doc_ids_[d]);
            }
        }
    }

    /// The analyzer the documents went through; queries must use it too.
    [[nodiscard]] const AnalyzerConfig& analyzer() const { return analyzer_; }
    [[nodiscard]] const CollectionStats& stats() const { return stats_; }
    [[nodiscard]] std::uint32_t num_docs() const { return stats_.num_docs; }
    [[nodiscard]] std::size_t vocabulary_size() const { return terms_.size(); }
    [[nodiscard]] std::span<const TermRecord> terms() const { return terms_; }
    [[nodiscard]] const TermRecord& term(TermId id) const { return terms_[id]; }

    [[nodiscard]] std::optional<TermId> find(std::string_view term) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), term,
                                   [](const TermRecord& r, std::string_view t) { return r.term < t; });
        if (it == terms_.end() || it->term != term) {
            return std::nullopt;
        }
        return static_cast<TermId>(it - terms_.begin());
    }

    [[nodiscard]] const std::string& doc_id(DocOrdinal d) const { return doc_ids_[d]; }
    [[nodiscard]] std::span<const std::string> doc_ids() const { return doc_ids_; }

    [[nodiscard]] std::optional<DocOrdinal> find_doc(const std::string& doc_id) const {
        auto it = doc_lookup_.find(doc_id);
        if (it == doc_lookup_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::uint32_t doc_len(DocOrdinal d) const { return stats_.doc_len[d]; }

    /// Terms of document `d`, ascending by TermId.
    [[nodiscard]] std::span<const DocTerm> doc_terms(DocOrdinal d) const {
        return std::span<const DocTerm>(fwd_terms_).subspan(fwd_offsets_[d],
                                                             fwd_offsets_[d + 1] - fwd_offsets_[d]);
    }

    [[nodiscard]] std::uint32_t tf(TermId t, DocOrdinal d) const {
        auto terms = doc_terms(d);
        auto it = std::lower_bound(terms.begin(), terms.end(), t,
                                   [](const DocTerm& dt, TermId id) { return dt.term < id; });
        return it != terms.end() && it->term == t ? it->tf : 0;
    }

    [[nodiscard]] std::uint32_t df(std::string_view term) const {
        auto id = find(term);
        return id ? terms_[*id].df : 0;
    }

    [[nodiscard]] std::uint64_t cf(std::string_view term) const {
        auto id = find(term);
        return id ? terms_[*id].cf : 0;
    }

    /// p_c(t) = cf(t) / total_tokens; 0 for unseen terms.
    [[nodiscard]] double collection_probability(TermId t) const {
        return static_cast<double>(terms_[t].cf) / static_cast<double>(stats_.total_tokens);
    }

    [[nodiscard]] double collection_probability(std::string_view term) const {
        auto id = find(term);
        return id ? collection_probability(*id) : 0.0;
    }

  private:
    AnalyzerConfig analyzer_;
    std::vector<std::string> doc_ids_;
    std::vector<TermRecord> terms_;
    CollectionStats stats_;
    std::unordered_map<std::string, DocOrdinal> doc_lookup_;
    std::vector<std::size_t> fwd_offsets_{0};
    std::vector<DocTerm> fwd_terms_;
};

/// p_c(t): unigram probability of `term` in the whole collection.
inline double p_c(const CorpusIndex& index, std::string_view term) {
    return index.collection_probability(term);
}

/// Analyzes and indexes `documents`. Analysis runs on up to `threads` worker
/// threads (0 = hardware concurrency); the result does not depend on it.
inline CorpusIndex build_index(const std::vector<RawDocument>& documents, const AnalyzerConfig& config,
                               unsigned threads = 0) {
    if (documents.empty()) {
        throw BuildError("empty collection");
    }
    {
        std::unordered_set<std::string_view> seen;
        for (const auto& d : documents) {
            if (d.doc_id.empty()) {
                throw BuildError("empty doc_id");
            }
            if (!seen.insert(d.doc_id).second) {
                throw BuildError("duplicate doc_id: " + d.doc_id);
            }
        }
    }

    std::vector<std::vector<std::string>> analyzed(documents.size());
    if (threads == 0) {
        threads = std::max(1U, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, documents.size()));
    if (threads <= 1 || documents.size() < 64) {
        for (std::size_t i = 0; i < documents.size(); ++i) {
            analyzed[i] = analyze(documents[i].text, config);
        }
    } else {
        std::vector<std::jthread> workers;
        for (unsigned w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                for (std::size_t i = w; i < documents.size(); i += threads) {
                    analyzed[i] = analyze(documents[i].text, config);
                }
            });
        }
    }

    std::map<std::string, std::vector<Posting>, std::less<>> inverted;
    std::vector<std::uint32_t> doc_len(documents.size());
    std::unordered_map<std::string_view, std::uint32_t> counts;
    for (DocOrdinal d = 0; d < documents.size(); ++d) {
        counts.clear();
        for (const auto& term : analyzed[d]) {
            ++counts[term];
        }
        doc_len[d] = static_cast<std::uint32_t>(analyzed[d].size());
        for (const auto& [term, tf] : counts) {
            auto it = inverted.find(term);
            if (it == inverted.end()) {
                it = inverted.emplace(std::string(term), std::vector<Posting>{}).first;
            }
            it->second.push_back({d, tf});
        }
    }

    std::vector<TermRecord> terms;
    terms.reserve(inverted.size());
    for (auto& [term, postings] : inverted) {
        TermRecord rec;
        rec.term = term;
        rec.df = static_cast<std::uint32_t>(postings.size());
        for (const auto& p : postings) {
            rec.cf += p.tf;
        }
        rec.postings = std::move(postings);
        terms.push_back(std::move(rec));
    }

    std::vector<std::string> ids;
    ids.reserve(documents.size());
    for (const auto& d : documents) {
        ids.push_back(d.doc_id);
    }
    return CorpusIndex(std::move(ids), std::move(doc_len), std::move(terms), config);
}

}  // namespace qexp
