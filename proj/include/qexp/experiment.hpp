#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "qexp/combine.hpp"
#include "qexp/config.hpp"
#include "qexp/error.hpp"
#include "qexp/eval.hpp"
#include "qexp/index_io.hpp"
#include "qexp/trec_parser.hpp"

namespace qexp {

enum class CorpusFormat { trec, dir };

/// Reads a whole file; `.gz` files are decompressed.
inline std::string read_file(const std::filesystem::path& path) {
    if (path.extension() == ".gz") {
        gzFile gz = gzopen(path.string().c_str(), "rb");
        if (gz == nullptr) {
            throw InvalidArgument("cannot open: " + path.string());
        }
        std::string out;
        char buf[1 << 16];
        int n = 0;
        while ((n = gzread(gz, buf, sizeof buf)) > 0) {
            out.append(buf, static_cast<std::size_t>(n));
        }
        bool failed = n < 0;
        gzclose(gz);
        if (failed) {
            throw InvalidArgument("corrupt gzip stream: " + path.string());
        }
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidArgument("cannot open: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Writes `content` to `path` through a temporary file and rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write: " + tmp.string());
        }
        out << content;
        if (!out) {
            throw Error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline std::vector<std::filesystem::path> files_under(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

/// Loads a collection. In `trec` mode `path` is one SGML file or a directory
/// of them (read recursively in path order); in `dir` mode every file in the
/// directory is one document.
inline std::vector<RawDocument> load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                            const TrecDocumentOptions& options, std::vector<ParseIssue>* issues) {
    if (!std::filesystem::exists(path)) {
        throw InvalidArgument("no such file or directory: " + path.string());
    }
    if (format == CorpusFormat::dir) {
        return read_document_directory(path);
    }
    std::vector<std::filesystem::path> files =
        std::filesystem::is_directory(path) ? files_under(path) : std::vector<std::filesystem::path>{path};
    std::vector<RawDocument> docs;
    for (const auto& f : files) {
        std::istringstream in(read_file(f));
        auto parsed = parse_trec_documents(in, options);
        for (auto& d : parsed.records) {
            docs.push_back(std::move(d));
        }
        if (issues != nullptr) {
            for (auto& i : parsed.issues) {
                i.message = f.string() + ": " + i.message;
                issues->push_back(std::move(i));
            }
        }
    }
    return docs;
}

inline std::vector<Topic> load_topics(const std::filesystem::path& path, std::vector<ParseIssue>* issues = nullptr) {
    if (!std::filesystem::exists(path)) {
        throw InvalidArgument("no such file: " + path.string());
    }
    std::istringstream in(read_file(path));
    auto parsed = parse_topics(in);
    if (issues != nullptr) {
        *issues = std::move(parsed.issues);
    }
    return std::move(parsed.records);
}

inline std::vector<AnalyzedQuery> analyze_topics(const std::vector<Topic>& topics, QueryField field,
                                                 const AnalyzerConfig& analyzer) {
    std::vector<AnalyzedQuery> queries;
    queries.reserve(topics.size());
    for (const auto& t : topics) {
        queries.push_back({t.query_id, analyze(query_text(t, field), analyzer)});
    }
    return queries;
}

inline Qrels load_qrels(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InvalidArgument("no such file: " + path.string());
    }
    std::istringstream in(read_file(path));
    return parse_qrels(in);
}

inline Run load_run(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw InvalidArgument("no such file: " + path.string());
    }
    std::istringstream in(read_file(path));
    return parse_run(in);
}

inline Run parse_run_text(const std::string& text) {
    std::istringstream in(text);
    return parse_run(in);
}

/// Per-query AP against the baseline, one line per query:
/// `run query_id baseline_ap run_ap delta`.
inline void log_ap_deltas(std::ostream& log, const std::string& name, const EvalReport& run,
                          const EvalReport& baseline) {
    for (const auto& [q, m] : run.per_query) {
        auto it = baseline.per_query.find(q);
        if (it == baseline.per_query.end()) {
            continue;
        }
        log << name << ' ' << q << ' ' << format_fixed(it->second.ap, 4) << ' ' << format_fixed(m.ap, 4) << ' '
            << format_fixed(m.ap - it->second.ap, 4) << '\n';
    }
}

struct ExperimentOutput {
    std::map<std::string, RunOutput> runs;
    std::vector<std::filesystem::path> files;
};

/// Runs every configured method over the topics and writes
/// `<output_dir>/<name>.run` (plus `<name>.audit.jsonl` for combinations).
/// Warnings go to `log`; when qrels are configured, per-query AP changes
/// against the baseline run are logged too.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, std::ostream& log, unsigned threads = 0) {
    auto index = load_index(cfg.index_path);
    std::vector<ParseIssue> issues;
    auto topics = load_topics(cfg.topics_path, &issues);
    for (const auto& i : issues) {
        log << "warning: " << cfg.topics_path.string() << " @" << i.byte_offset << ": " << i.message << '\n';
    }
    auto queries = analyze_topics(topics, cfg.query_field, index.analyzer());

    ExperimentOutput out;
    out.runs = run_matrix(queries, index, cfg.methods, cfg.depth, cfg.model, threads);
    std::filesystem::create_directories(cfg.output_dir);
    for (const auto& config : cfg.methods) {
        const auto& r = out.runs.at(config.name);
        auto run_path = cfg.output_dir / (config.name + ".run");
        write_file_atomic(run_path, r.run);
        out.files.push_back(run_path);
        if (config.kind == RunConfig::Kind::combination) {
            auto audit_path = cfg.output_dir / (config.name + ".audit.jsonl");
            write_file_atomic(audit_path, r.audit_jsonl);
            out.files.push_back(audit_path);
        }
        for (const auto& w : r.warnings) {
            log << "warning: " << w << '\n';
        }
    }

    if (!cfg.qrels_path.empty() && std::filesystem::exists(cfg.qrels_path)) {
        auto qrels = load_qrels(cfg.qrels_path);
        auto base = std::find_if(cfg.methods.begin(), cfg.methods.end(),
                                 [](const RunConfig& c) { return c.kind == RunConfig::Kind::baseline; });
        if (base != cfg.methods.end()) {
            auto base_report = evaluate_run(parse_run_text(out.runs.at(base->name).run), qrels, cfg.depth);
            for (const auto& config : cfg.methods) {
                if (config.name == base->name) {
                    continue;
                }
                auto report = evaluate_run(parse_run_text(out.runs.at(config.name).run), qrels, cfg.depth);
                log_ap_deltas(log, config.name, report, base_report);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Parameter sweeps

/// Parses `start:stop:step` (inclusive) or a single value.
inline std::vector<std::size_t> parse_range(const std::string& text) {
    std::vector<std::size_t> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) {
        parts.push_back(detail::parse_count("range", std::string(detail::trim(item))));
    }
    if (parts.size() == 1) {
        return parts;
    }
    if (parts.size() != 3 || parts[0] > parts[1]) {
        throw ConfigError("range must be start:stop:step with start <= stop: " + text);
    }
    std::vector<std::size_t> values;
    for (std::size_t v = parts[0]; v <= parts[1]; v += parts[2]) {
        values.push_back(v);
    }
    return values;
}

struct SweepCell {
    std::size_t feedback_docs = 0;
    std::size_t terms = 0;
    double map_score = 0.0;
};

/// Returns `base` with D and T replaced. For combinations T is the final term
/// count T'; T and D' grow to stay valid when the sweep exceeds them.
inline RunConfig with_sweep_params(RunConfig base, std::size_t d, std::size_t t) {
    if (base.kind == RunConfig::Kind::single) {
        base.expansion.feedback_docs = d;
        base.expansion.expansion_terms = t;
    } else if (base.kind == RunConfig::Kind::combination) {
        base.combination.feedback_docs = d;
        base.combination.final_terms = t;
        base.combination.candidates = std::max(base.combination.candidates, t);
        base.combination.association_docs = std::max(base.combination.association_docs, d);
    } else {
        throw ConfigError("cannot sweep the baseline");
    }
    return base;
}

/// MAP for every (D, T) pair, D-major.
inline std::vector<SweepCell> sweep(const std::vector<AnalyzedQuery>& queries, const CorpusIndex& index,
                                    const Qrels& qrels, const RunConfig& base, const std::vector<std::size_t>& d_values,
                                    const std::vector<std::size_t>& t_values, std::size_t depth,
                                    const RetrievalModel& model, unsigned threads = 0) {
    if (d_values.empty() || t_values.empty()) {
        throw ConfigError("sweep ranges must be non-empty");
    }
    std::vector<SweepCell> cells;
    for (auto d : d_values) {
        for (auto t : t_values) {
            auto config = with_sweep_params(base, d, t);
            auto out = run_matrix(queries, index, {config}, depth, model, threads);
            auto report = evaluate_run(parse_run_text(out.at(config.name).run), qrels, depth);
            cells.push_back({d, t, report.map_score});
        }
    }
    return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells) {
    std::string out = "D,T,MAP\n";
    for (const auto& c : cells) {
        out += std::to_string(c.feedback_docs) + "," + std::to_string(c.terms) + "," + format_fixed(c.map_score, 6) + "\n";
    }
    return out;
}

}  // namespace qexp
