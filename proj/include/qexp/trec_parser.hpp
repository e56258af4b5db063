#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/error.hpp"

namespace qexp {

struct RawDocument {
    std::string doc_id;
    std::string text;

    friend bool operator==(const RawDocument&, const RawDocument&) = default;
};

struct Topic {
    std::string query_id;
    std::string title;
    std::string description;
    std::string narrative;

    friend bool operator==(const Topic&, const Topic&) = default;
};

/// A record that could not be parsed. Parsing continues past it.
struct ParseIssue {
    std::uint64_t byte_offset = 0;
    std::string message;
};

template <typename Record>
struct ParseResult {
    std::vector<Record> records;
    std::vector<ParseIssue> issues;
};

struct TrecDocumentOptions {
    // Also index <HEADLINE> and <TITLE> fields alongside <TEXT>.
    bool include_headline = true;
};

namespace detail {

inline std::string lower_copy(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n\f\v");
    if (first == std::string_view::npos) {
        return {};
    }
    auto last = s.find_last_not_of(" \t\r\n\f\v");
    return s.substr(first, last - first + 1);
}

// Collapses whitespace runs to single spaces and trims.
inline std::string squeeze(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : trim(s)) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

inline std::string strip_tags(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_tag = false;
    for (char c : s) {
        if (c == '<') {
            in_tag = true;
        } else if (c == '>' && in_tag) {
            in_tag = false;
            out.push_back(' ');
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    return out;
}

// Contents of every <tag>...</tag> element in `block`, in order. `lower` is
// the lowercased copy of block used for case-insensitive matching.
inline std::vector<std::string_view> elements(std::string_view block, std::string_view lower,
                                              std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    std::string close = "</" + std::string(tag) + ">";
    std::vector<std::string_view> found;
    std::size_t pos = 0;
    while ((pos = lower.find(open, pos)) != std::string_view::npos) {
        std::size_t start = pos + open.size();
        std::size_t end = lower.find(close, start);
        if (end == std::string_view::npos) {
            end = block.size();
        }
        found.push_back(block.substr(start, end - start));
        pos = end;
    }
    return found;
}

// Splits a stream into the blocks between `<open>` and `</open>` markers,
// reporting the byte offset of each block start.
template <typename Fn>
void for_each_block(std::istream& in, std::string_view tag, Fn&& fn) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    std::string block;
    std::uint64_t offset = 0;
    std::uint64_t block_offset = 0;
    bool inside = false;
    std::string line;
    while (std::getline(in, line)) {
        std::uint64_t line_offset = offset;
        offset += line.size() + 1;
        std::string lower = lower_copy(line);
        std::size_t pos = 0;
        while (pos <= line.size()) {
            if (!inside) {
                auto o = lower.find(open, pos);
                if (o == std::string::npos) {
                    break;
                }
                inside = true;
                block.clear();
                block_offset = line_offset + o;
                pos = o + open.size();
            } else {
                auto c = lower.find(close, pos);
                if (c == std::string::npos) {
                    block.append(line, pos, std::string::npos);
                    block.push_back('\n');
                    break;
                }
                block.append(line, pos, c - pos);
                fn(std::string_view(block), block_offset);
                inside = false;
                pos = c + close.size();
            }
        }
    }
    if (inside) {
        fn(std::string_view(block), block_offset);
    }
}

}  // namespace detail

/// Parses concatenated TREC SGML `<DOC>` blocks. Each block needs a `<DOCNO>`;
/// its text is the tag-stripped `<TEXT>` content (plus headline fields when
/// enabled), fields joined by newlines and trimmed.
inline ParseResult<RawDocument> parse_trec_documents(std::istream& in,
                                                     const TrecDocumentOptions& options = {}) {
    ParseResult<RawDocument> result;
    detail::for_each_block(in, "doc", [&](std::string_view block, std::uint64_t offset) {
        std::string lower = detail::lower_copy(block);
        auto docno = detail::elements(block, lower, "docno");
        if (docno.empty() || detail::trim(docno.front()).empty()) {
            result.issues.push_back({offset, "document block without <DOCNO>"});
            return;
        }
        // Fields are gathered in document order.
        std::vector<std::pair<std::size_t, std::string_view>> fields;
        auto collect = [&](std::string_view tag) {
            for (auto f : detail::elements(block, lower, tag)) {
                fields.emplace_back(static_cast<std::size_t>(f.data() - block.data()), f);
            }
        };
        collect("text");
        if (options.include_headline) {
            collect("headline");
            collect("title");
        }
        std::sort(fields.begin(), fields.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::string text;
        for (const auto& [pos, f] : fields) {
            if (!text.empty()) {
                text.push_back('\n');
            }
            text += detail::strip_tags(f);
        }
        result.records.push_back(
            {std::string(detail::trim(docno.front())), std::string(detail::trim(text))});
    });
    return result;
}

/// Writes documents in the form parse_trec_documents reads back.
inline void write_trec_documents(std::ostream& out, const std::vector<RawDocument>& docs) {
    for (const auto& d : docs) {
        out << "<DOC>\n<DOCNO> " << d.doc_id << " </DOCNO>\n<TEXT>\n" << d.text << "\n</TEXT>\n</DOC>\n";
    }
}

/// Plain mode: one document per regular file, doc_id = file name. Files are
/// read in file-name order.
inline std::vector<RawDocument> read_document_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw InvalidArgument("not a directory: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RawDocument> docs;
    docs.reserve(files.size());
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        docs.push_back({f.filename().string(), buf.str()});
    }
    return docs;
}

namespace detail {

// Topic sections are usually unterminated: a section runs to the next tag.
inline std::string topic_section(std::string_view block, std::string_view lower, std::string_view tag) {
    std::string open = "<" + std::string(tag) + ">";
    auto pos = lower.find(open);
    if (pos == std::string_view::npos) {
        return {};
    }
    std::size_t start = pos + open.size();
    std::size_t end = lower.find('<', start);
    if (end == std::string_view::npos) {
        end = block.size();
    }
    return squeeze(block.substr(start, end - start));
}

inline std::string drop_label(std::string s, std::initializer_list<std::string_view> labels) {
    std::string lower = lower_copy(s);
    for (auto label : labels) {
        if (lower.starts_with(label)) {
            return std::string(trim(std::string_view(s).substr(label.size())));
        }
    }
    return s;
}

}  // namespace detail

/// Parses TREC topic markup (`<top>`, `<num>`, `<title>`, `<desc>`, `<narr>`).
/// Which field becomes the query is decided later.
inline ParseResult<Topic> parse_topics(std::istream& in) {
    ParseResult<Topic> result;
    detail::for_each_block(in, "top", [&](std::string_view block, std::uint64_t offset) {
        std::string lower = detail::lower_copy(block);
        std::string num = detail::drop_label(detail::topic_section(block, lower, "num"), {"number:"});
        if (num.empty()) {
            result.issues.push_back({offset, "topic without <num>"});
            return;
        }
        Topic t;
        t.query_id = std::move(num);
        t.title = detail::drop_label(detail::topic_section(block, lower, "title"), {"topic:"});
        t.description = detail::drop_label(detail::topic_section(block, lower, "desc"), {"description:"});
        t.narrative = detail::drop_label(detail::topic_section(block, lower, "narr"), {"narrative:"});
        if (t.title.empty() && t.description.empty()) {
            result.issues.push_back({offset, "topic " + t.query_id + " has neither title nor description"});
            return;
        }
        result.records.push_back(std::move(t));
    });
    return result;
}

}  // namespace qexp
