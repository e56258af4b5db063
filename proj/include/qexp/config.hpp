#pragma once

// Experiment configuration: `key = value` lines, then optional method blocks.
//
//   index       = runs/robust.idx
//   topics      = topics.301-450
//   qrels       = qrels.301-450
//   query_field = title          # or desc
//   output_dir  = out
//   depth       = 1000
//   model       = ifb2           # or bm25
//   c           = 1.0
//
//   [method kld]
//   D = 10
//   T = 40
//
//   [method kldlca]
//   T_prime = 30
//
// A method block is named after a run: baseline, kld, bo1, bo1new, lca,
// lcanew, rm3, kldlca, kldrm3, bo1lca, bo1rm3. `[method NAME : TYPE]` runs
// TYPE under a different name, which lets one config hold several parameter
// settings of the same method. With no method blocks the standard eleven
// runs are configured with their default parameters.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qexp/combine.hpp"
#include "qexp/error.hpp"
#include "qexp/retrieval.hpp"
#include "qexp/trec_parser.hpp"

namespace qexp {

enum class QueryField { title, desc };

struct ExperimentConfig {
    std::filesystem::path index_path;
    std::filesystem::path topics_path;
    std::filesystem::path qrels_path;
    QueryField query_field = QueryField::title;
    std::filesystem::path output_dir = "runs";
    std::size_t depth = 1000;
    RetrievalModel model;
    std::vector<RunConfig> methods = standard_run_configs();
};

/// Resolves a run type name (kld, bo1lca, baseline, ...) to its default config.
inline std::optional<RunConfig> run_config_for(std::string_view type) {
    for (const auto& c : standard_run_configs()) {
        if (c.name == type) {
            return c;
        }
    }
    return std::nullopt;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for " + key + ": " + value);
    }
}

inline std::size_t parse_count(const std::string& key, const std::string& value) {
    double v = parse_double(key, value);
    if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw ConfigError(key + " must be a positive integer: " + value);
    }
    return static_cast<std::size_t>(v);
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") {
        return true;
    }
    if (value == "false" || value == "no" || value == "0") {
        return false;
    }
    throw ConfigError("invalid boolean for " + key + ": " + value);
}

inline void apply_method_key(RunConfig& c, const std::string& key, const std::string& value) {
    if (c.kind == RunConfig::Kind::baseline) {
        throw ConfigError("baseline takes no parameters (got " + key + ")");
    }
    if (c.kind == RunConfig::Kind::single) {
        auto& p = c.expansion;
        if (key == "D") {
            p.feedback_docs = parse_count(key, value);
        } else if (key == "T") {
            p.expansion_terms = parse_count(key, value);
        } else if (key == "delta") {
            p.delta = parse_double(key, value);
        } else if (key == "mu") {
            p.mu = parse_double(key, value);
        } else if (key == "alpha") {
            p.alpha = parse_double(key, value);
        } else if (key == "log_base") {
            p.kld_log_base = parse_double(key, value);
        } else {
            throw ConfigError("unknown parameter for " + c.name + ": " + key);
        }
        return;
    }
    auto& p = c.combination;
    if (key == "D") {
        p.feedback_docs = parse_count(key, value);
    } else if (key == "T") {
        p.candidates = parse_count(key, value);
    } else if (key == "D_prime") {
        p.association_docs = parse_count(key, value);
    } else if (key == "T_prime") {
        p.final_terms = parse_count(key, value);
    } else if (key == "delta") {
        p.delta = parse_double(key, value);
    } else if (key == "mu") {
        p.mu = parse_double(key, value);
    } else if (key == "log_base") {
        p.kld_log_base = parse_double(key, value);
    } else if (key == "rerank") {
        p.rerank = parse_bool(key, value);
    } else {
        throw ConfigError("unknown parameter for " + c.name + ": " + key);
    }
}

inline void validate_run(const RunConfig& c) {
    try {
        if (c.kind == RunConfig::Kind::single) {
            c.expansion.validate();
        } else if (c.kind == RunConfig::Kind::combination) {
            c.combination.validate();
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError("method " + c.name + ": " + e.what());
    }
}

}  // namespace detail

/// Parses the configuration text. Relative paths are resolved against `base_dir`.
inline ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::vector<RunConfig> methods;
    std::optional<std::size_t> current;
    std::string line;
    std::size_t line_no = 0;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::string text(detail::trim(line));
        if (text.empty()) {
            continue;
        }
        auto where = " (line " + std::to_string(line_no) + ")";
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw ConfigError("unterminated section header" + where);
            }
            std::istringstream header(text.substr(1, text.size() - 2));
            std::string word, name, colon, type;
            header >> word >> name;
            if (word != "method" || name.empty()) {
                throw ConfigError("expected [method NAME]" + where);
            }
            type = name;
            if (header >> colon) {
                if (colon != ":" || !(header >> type)) {
                    throw ConfigError("expected [method NAME : TYPE]" + where);
                }
            }
            auto base = run_config_for(type);
            if (!base) {
                throw ConfigError("unknown method type: " + type + where);
            }
            for (const auto& m : methods) {
                if (m.name == name) {
                    throw ConfigError("duplicate method name: " + name + where);
                }
            }
            base->name = name;
            methods.push_back(*base);
            current = methods.size() - 1;
            continue;
        }
        auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value" + where);
        }
        std::string key(detail::trim(std::string_view(text).substr(0, eq)));
        std::string value(detail::trim(std::string_view(text).substr(eq + 1)));
        if (current) {
            try {
                detail::apply_method_key(methods[*current], key, value);
            } catch (const ConfigError& e) {
                throw ConfigError(e.what() + where);
            }
            continue;
        }
        if (key == "index") {
            cfg.index_path = resolve(value);
        } else if (key == "topics") {
            cfg.topics_path = resolve(value);
        } else if (key == "qrels") {
            cfg.qrels_path = resolve(value);
        } else if (key == "output_dir") {
            cfg.output_dir = resolve(value);
        } else if (key == "query_field") {
            if (value == "title") {
                cfg.query_field = QueryField::title;
            } else if (value == "desc" || value == "description") {
                cfg.query_field = QueryField::desc;
            } else {
                throw ConfigError("query_field must be title or desc" + where);
            }
        } else if (key == "depth") {
            cfg.depth = detail::parse_count(key, value);
        } else if (key == "model") {
            if (value == "ifb2") {
                cfg.model.kind = RetrievalModel::Kind::ifb2;
            } else if (value == "bm25") {
                cfg.model.kind = RetrievalModel::Kind::bm25;
            } else {
                throw ConfigError("model must be ifb2 or bm25" + where);
            }
        } else if (key == "c") {
            cfg.model.c = detail::parse_double(key, value);
        } else if (key == "k1") {
            cfg.model.k1 = detail::parse_double(key, value);
        } else if (key == "b") {
            cfg.model.b = detail::parse_double(key, value);
        } else {
            throw ConfigError("unknown key: " + key + where);
        }
    }
    if (!methods.empty()) {
        cfg.methods = std::move(methods);
    }
    for (const auto& m : cfg.methods) {
        detail::validate_run(m);
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file: " + path.string());
    }
    return parse_experiment_config(in, path.parent_path());
}

/// The query text of a topic for the chosen field. Falls back to the other
/// field when the chosen one is empty.
inline const std::string& query_text(const Topic& topic, QueryField field) {
    if (field == QueryField::desc) {
        return topic.description.empty() ? topic.title : topic.description;
    }
    return topic.title.empty() ? topic.description : topic.title;
}

}  // namespace qexp
