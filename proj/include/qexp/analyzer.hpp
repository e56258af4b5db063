#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qexp/porter_stemmer.hpp"
#include "qexp/stopwords.hpp"

namespace qexp {

enum class Stemmer { porter, none };

struct AnalyzerConfig {
    std::set<std::string, std::less<>> stopwords = default_stopwords();
    Stemmer stemmer = Stemmer::porter;
    bool lowercase = true;
};

namespace detail {

// Decodes one UTF-8 code point starting at `pos`, advancing `pos`. Invalid
// bytes decode as U+FFFD and consume a single byte.
inline char32_t next_code_point(std::string_view text, std::size_t& pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    unsigned char lead = byte(pos);
    if (lead < 0x80) {
        ++pos;
        return lead;
    }
    std::size_t len = (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || pos + len > text.size()) {
        ++pos;
        return 0xFFFD;
    }
    char32_t cp = lead & (0xFF >> (len + 1));
    for (std::size_t i = 1; i < len; ++i) {
        if ((byte(pos + i) & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (byte(pos + i) & 0x3F);
    }
    pos += len;
    return cp;
}

// Letters and digits. Outside ASCII this is approximate: every code point is a
// word character except the Latin-1 symbol block, the general punctuation and
// CJK punctuation blocks, and the replacement character.
inline bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    }
    if (cp < 0xC0) {
        return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    }
    if (cp == 0xD7 || cp == 0xF7 || cp == 0xFFFD) {
        return false;
    }
    if ((cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F)) {
        return false;
    }
    return true;
}

inline void ascii_lower(std::string& s) {
    for (auto& c : s) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
}

}  // namespace detail

/// Splits `text` into maximal runs of letters/digits.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < text.size()) {
        std::size_t here = pos;
        bool word = detail::is_word_char(detail::next_code_point(text, pos));
        if (word && start == std::string_view::npos) {
            start = here;
        } else if (!word && start != std::string_view::npos) {
            tokens.emplace_back(text.substr(start, here - start));
            start = std::string_view::npos;
        }
    }
    if (start != std::string_view::npos) {
        tokens.emplace_back(text.substr(start));
    }
    return tokens;
}

/// Tokenize, lowercase, drop stopwords, stem. Order is preserved. The same
/// function analyzes documents and queries.
inline std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
    static const PorterStemmer porter;
    std::vector<std::string> terms;
    for (auto& token : tokenize(text)) {
        if (config.lowercase) {
            detail::ascii_lower(token);
        }
        if (config.stopwords.contains(token)) {
            continue;
        }
        if (config.stemmer == Stemmer::porter) {
            terms.push_back(porter(token));
        } else {
            terms.push_back(std::move(token));
        }
    }
    return terms;
}

}  // namespace qexp
