// qexp: batch query-expansion experiments over TREC-style collections.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qexp/combine.hpp"
#include "qexp/config.hpp"
#include "qexp/eval.hpp"
#include "qexp/expansion.hpp"
#include "qexp/experiment.hpp"
#include "qexp/index_io.hpp"

namespace fs = std::filesystem;
using namespace qexp;

namespace {

constexpr int exit_failure = 1;
constexpr int exit_missing_path = 2;

struct MissingPath : Error {
    using Error::Error;
};

void require_exists(const fs::path& p) {
    if (!fs::exists(p)) {
        throw MissingPath("no such file or directory: " + p.string());
    }
}

struct QueryOptions {
    std::string query;
    std::string query_id = "1";
    std::string topics;
    std::string field = "title";
};

void add_query_options(CLI::App* cmd, QueryOptions& q) {
    auto* text = cmd->add_option("--query", q.query, "Query text");
    auto* topics = cmd->add_option("--topics", q.topics, "TREC topic file");
    text->excludes(topics);
    cmd->add_option("--qid", q.query_id, "Query id for --query")->capture_default_str();
    cmd->add_option("--field", q.field, "Topic field used as the query")
        ->check(CLI::IsMember({"title", "desc"}))
        ->capture_default_str();
}

std::vector<AnalyzedQuery> load_queries(const QueryOptions& q, const CorpusIndex& index) {
    if (!q.topics.empty()) {
        require_exists(q.topics);
        std::vector<ParseIssue> issues;
        auto topics = load_topics(q.topics, &issues);
        for (const auto& i : issues) {
            std::cerr << "warning: " << q.topics << " @" << i.byte_offset << ": " << i.message << '\n';
        }
        return analyze_topics(topics, q.field == "desc" ? QueryField::desc : QueryField::title, index.analyzer());
    }
    if (q.query.empty()) {
        throw InvalidArgument("one of --query or --topics is required");
    }
    return {{q.query_id, analyze(q.query, index.analyzer())}};
}

struct ModelOptions {
    std::string kind = "ifb2";
    double c = 1.0;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--model", m.kind, "Document weighting model")
        ->check(CLI::IsMember({"ifb2", "bm25"}))
        ->capture_default_str();
    cmd->add_option("--c", m.c, "IFB2 length normalization constant")->capture_default_str();
}

RetrievalModel to_model(const ModelOptions& m) {
    RetrievalModel model;
    model.kind = m.kind == "bm25" ? RetrievalModel::Kind::bm25 : RetrievalModel::Kind::ifb2;
    model.c = m.c;
    return model;
}

// --- index -----------------------------------------------------------------

struct IndexOptions {
    std::string corpus;
    std::string format = "trec";
    std::string index;
    std::string stopwords;
    bool no_stopwords = false;
    bool no_stem = false;
    bool no_headline = false;
    bool force = false;
    unsigned threads = 0;
};

int cmd_index(const IndexOptions& o) {
    require_exists(o.corpus);
    if (fs::exists(o.index) && !o.force) {
        std::cerr << "error: index exists: " << o.index << " (use --force to overwrite)\n";
        return exit_failure;
    }
    AnalyzerConfig analyzer;
    if (o.no_stopwords) {
        analyzer.stopwords.clear();
    } else if (!o.stopwords.empty()) {
        require_exists(o.stopwords);
        analyzer.stopwords = load_stopwords(o.stopwords);
    }
    analyzer.stemmer = o.no_stem ? Stemmer::none : Stemmer::porter;

    TrecDocumentOptions trec;
    trec.include_headline = !o.no_headline;
    std::vector<ParseIssue> issues;
    auto docs = load_corpus(o.corpus, o.format == "dir" ? CorpusFormat::dir : CorpusFormat::trec, trec, &issues);
    for (const auto& i : issues) {
        std::cerr << "warning: @" << i.byte_offset << ": " << i.message << '\n';
    }
    auto index = build_index(docs, analyzer, o.threads);
    save_index(index, o.index);
    std::cout << "N=" << index.num_docs() << " vocab=" << index.vocabulary_size()
              << " tokens=" << index.stats().total_tokens << '\n';
    return 0;
}

// --- search ----------------------------------------------------------------

struct SearchOptions {
    std::string index;
    QueryOptions query;
    ModelOptions model;
    std::size_t k = 1000;
    std::string tag = "baseline";
};

int cmd_search(const SearchOptions& o) {
    require_exists(o.index);
    auto index = load_index(o.index);
    for (const auto& q : load_queries(o.query, index)) {
        auto ranking = retrieve(original_query(q), index, o.k, to_model(o.model));
        write_run(std::cout, q.query_id, ranking, o.tag);
    }
    return 0;
}

// --- expand ----------------------------------------------------------------

struct ExpandOptions {
    std::string index;
    QueryOptions query;
    ModelOptions model;
    std::string method = "kld";
    std::optional<std::size_t> d, t, d_prime, t_prime;
    std::optional<double> delta, mu, alpha;
};

RunConfig expand_config(const ExpandOptions& o) {
    auto config = run_config_for(o.method);
    if (!config || config->kind == RunConfig::Kind::baseline) {
        throw InvalidArgument("unknown expansion method: " + o.method);
    }
    if (config->kind == RunConfig::Kind::single) {
        auto& p = config->expansion;
        if (o.d) p.feedback_docs = *o.d;
        if (o.t) p.expansion_terms = *o.t;
        if (o.delta) p.delta = *o.delta;
        if (o.mu) p.mu = *o.mu;
        if (o.alpha) p.alpha = *o.alpha;
        p.validate();
    } else {
        auto& p = config->combination;
        if (o.d) p.feedback_docs = *o.d;
        if (o.t) p.candidates = *o.t;
        if (o.d_prime) p.association_docs = *o.d_prime;
        if (o.t_prime) p.final_terms = *o.t_prime;
        if (o.delta) p.delta = *o.delta;
        if (o.mu) p.mu = *o.mu;
        p.validate();
    }
    return *config;
}

int cmd_expand(const ExpandOptions& o) {
    require_exists(o.index);
    auto index = load_index(o.index);
    auto config = expand_config(o);
    auto model = to_model(o.model);
    for (const auto& q : load_queries(o.query, index)) {
        WeightedQuery wq;
        std::vector<std::string> warnings;
        if (config.kind == RunConfig::Kind::single) {
            auto r = expand(q, index, config.method, config.expansion, model);
            wq = std::move(r.query);
            warnings = std::move(r.warnings);
        } else {
            auto r = combine_expand(q, index, config.combination, model);
            wq = std::move(r.query);
            warnings = std::move(r.warnings);
        }
        for (const auto& w : warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        for (const auto& [term, weight] : wq.terms) {
            std::cout << wq.query_id << '\t' << term << '\t' << format_fixed6(weight) << '\n';
        }
    }
    return 0;
}

// --- run -------------------------------------------------------------------

struct RunOptions {
    std::string config;
    unsigned threads = 0;
};

ExperimentConfig load_checked_config(const std::string& path) {
    require_exists(path);
    auto cfg = load_experiment_config(path);
    require_exists(cfg.index_path);
    require_exists(cfg.topics_path);
    return cfg;
}

int cmd_run(const RunOptions& o) {
    auto cfg = load_checked_config(o.config);
    auto out = run_experiment(cfg, std::cerr, o.threads);
    for (const auto& f : out.files) {
        std::cout << f.string() << '\n';
    }
    return 0;
}

// --- eval ------------------------------------------------------------------

struct EvalOptions {
    std::string qrels;
    std::string baseline;
    std::vector<std::string> runs;
    std::string json = "eval_report.json";
    std::size_t depth = 1000;
};

int cmd_eval(const EvalOptions& o) {
    require_exists(o.qrels);
    require_exists(o.baseline);
    auto qrels = load_qrels(o.qrels);
    std::map<std::string, EvalReport> reports;
    std::vector<std::string> order;
    auto add = [&](const std::string& path) {
        require_exists(path);
        auto name = fs::path(path).stem().string();
        if (reports.contains(name)) {
            throw InvalidArgument("two runs share the name " + name);
        }
        reports.emplace(name, evaluate_run(load_run(path), qrels, o.depth));
        order.push_back(name);
    };
    add(o.baseline);
    for (const auto& r : o.runs) {
        add(r);
    }
    auto table = compare_table(reports, order.front(), default_references(), order);
    std::cout << format_table(table);
    write_file_atomic(o.json, table_to_json(table).dump(2) + "\n");
    return 0;
}

// --- sweep -----------------------------------------------------------------

struct SweepOptions {
    std::string config;
    std::string method = "lca";
    std::string d_range = "10:50:10";
    std::string t_range = "5:50:5";
    std::string out;
    unsigned threads = 0;
};

int cmd_sweep(const SweepOptions& o) {
    auto cfg = load_checked_config(o.config);
    require_exists(cfg.qrels_path);
    auto base = run_config_for(o.method);
    for (const auto& m : cfg.methods) {
        if (m.name == o.method) {
            base = m;
        }
    }
    if (!base || base->kind == RunConfig::Kind::baseline) {
        throw InvalidArgument("cannot sweep method: " + o.method);
    }
    auto index = load_index(cfg.index_path);
    auto queries = analyze_topics(load_topics(cfg.topics_path), cfg.query_field, index.analyzer());
    auto qrels = load_qrels(cfg.qrels_path);
    auto cells = sweep(queries, index, qrels, *base, parse_range(o.d_range), parse_range(o.t_range), cfg.depth,
                       cfg.model, o.threads);
    auto csv = sweep_csv(cells);
    if (o.out.empty()) {
        std::cout << csv;
    } else {
        write_file_atomic(o.out, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-relevance feedback query expansion experiments"};
    app.require_subcommand(1);

    IndexOptions index_opts;
    auto* index_cmd = app.add_subcommand("index", "Build an index from a document collection");
    index_cmd->add_option("corpus", index_opts.corpus, "TREC file/directory or plain document directory")->required();
    index_cmd->add_option("--format", index_opts.format, "Corpus format")
        ->check(CLI::IsMember({"trec", "dir"}))
        ->capture_default_str();
    index_cmd->add_option("-o,--index", index_opts.index, "Index file to write")->required();
    index_cmd->add_option("--stopwords", index_opts.stopwords, "Stopword file (one term per line)");
    index_cmd->add_flag("--no-stopwords", index_opts.no_stopwords, "Keep stopwords");
    index_cmd->add_flag("--no-stem", index_opts.no_stem, "Disable Porter stemming");
    index_cmd->add_flag("--no-headline", index_opts.no_headline, "Index only <TEXT> fields");
    index_cmd->add_flag("--force", index_opts.force, "Overwrite an existing index");
    index_cmd->add_option("--threads", index_opts.threads, "Analysis threads (0 = all cores)");

    SearchOptions search_opts;
    auto* search_cmd = app.add_subcommand("search", "Retrieve without feedback and print a TREC run");
    search_cmd->add_option("-i,--index", search_opts.index, "Index file")->required();
    add_query_options(search_cmd, search_opts.query);
    add_model_options(search_cmd, search_opts.model);
    search_cmd->add_option("-k", search_opts.k, "Documents per query")->capture_default_str()->check(CLI::PositiveNumber);
    search_cmd->add_option("--tag", search_opts.tag, "Run tag")->capture_default_str();

    ExpandOptions expand_opts;
    auto* expand_cmd = app.add_subcommand("expand", "Print expanded queries as query_id, term, weight");
    expand_cmd->add_option("-i,--index", expand_opts.index, "Index file")->required();
    add_query_options(expand_cmd, expand_opts.query);
    add_model_options(expand_cmd, expand_opts.model);
    expand_cmd->add_option("-m,--method", expand_opts.method,
                           "kld, bo1, bo1new, lca, lcanew, rm3, kldlca, kldrm3, bo1lca, bo1rm3")
        ->capture_default_str();
    expand_cmd->add_option("--D", expand_opts.d, "Feedback documents");
    expand_cmd->add_option("--T", expand_opts.t, "Expansion terms (candidates for combinations)");
    expand_cmd->add_option("--D-prime", expand_opts.d_prime, "Association documents (combinations)");
    expand_cmd->add_option("--T-prime", expand_opts.t_prime, "Final terms (combinations)");
    expand_cmd->add_option("--delta", expand_opts.delta, "LCA delta");
    expand_cmd->add_option("--mu", expand_opts.mu, "RM3 Dirichlet mu");
    expand_cmd->add_option("--alpha", expand_opts.alpha, "RM3 interpolation weight");

    RunOptions run_opts;
    auto* run_cmd = app.add_subcommand("run", "Run every configured method over the topics");
    run_cmd->add_option("config", run_opts.config, "Experiment config file")->required();
    run_cmd->add_option("--threads", run_opts.threads, "Worker threads (0 = all cores)");

    EvalOptions eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "Compare runs against a baseline");
    eval_cmd->add_option("--qrels", eval_opts.qrels, "Relevance judgments")->required();
    eval_cmd->add_option("--baseline", eval_opts.baseline, "Baseline run file")->required();
    eval_cmd->add_option("runs", eval_opts.runs, "Run files to compare");
    eval_cmd->add_option("--json", eval_opts.json, "JSON report path")->capture_default_str();
    eval_cmd->add_option("--depth", eval_opts.depth, "Evaluation depth")->capture_default_str();

    SweepOptions sweep_opts;
    auto* sweep_cmd = app.add_subcommand("sweep", "MAP over a grid of D and T values, as CSV");
    sweep_cmd->add_option("config", sweep_opts.config, "Experiment config file")->required();
    sweep_cmd->add_option("-m,--method", sweep_opts.method, "Method or configured run name")->capture_default_str();
    sweep_cmd->add_option("--D", sweep_opts.d_range, "Feedback documents, start:stop:step")->capture_default_str();
    sweep_cmd->add_option("--T", sweep_opts.t_range, "Expansion terms, start:stop:step")->capture_default_str();
    sweep_cmd->add_option("-o,--out", sweep_opts.out, "CSV output path (default stdout)");
    sweep_cmd->add_option("--threads", sweep_opts.threads, "Worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*index_cmd) return cmd_index(index_opts);
        if (*search_cmd) return cmd_search(search_opts);
        if (*expand_cmd) return cmd_expand(expand_opts);
        if (*run_cmd) return cmd_run(run_opts);
        if (*eval_cmd) return cmd_eval(eval_opts);
        if (*sweep_cmd) return cmd_sweep(sweep_opts);
    } catch (const MissingPath& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_missing_path;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_failure;
}
