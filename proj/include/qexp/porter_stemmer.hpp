#pragma once

#include <array>
#include <string>
#include <string_view>

namespace qexp {

/// The original Porter (1980) suffix-stripping algorithm.
///
/// This follows the published rule set, not the later "Porter2" revision and
/// not the C reference release (which adds the `logi` rule and rewrites
/// `abli` as `bli`). Input is expected to be lowercase ASCII; any other byte is
/// treated as a consonant. Words of two letters or fewer are returned as is.
class PorterStemmer {
  public:
    [[nodiscard]] std::string operator()(std::string_view word) const {
        std::string w(word);
        if (w.size() <= 2) {
            return w;
        }
        step1a(w);
        step1b(w);
        step1c(w);
        step2(w);
        step3(w);
        step4(w);
        step5(w);
        return w;
    }

  private:
    struct Rule {
        std::string_view suffix;
        std::string_view replacement;
    };

    static bool is_consonant(std::string_view w, std::size_t i) {
        switch (w[i]) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u':
            return false;
        case 'y':
            return i == 0 || !is_consonant(w, i - 1);
        default:
            return true;
        }
    }

    // m in [C](VC)^m[V], computed over the first `len` characters.
    static int measure(std::string_view w, std::size_t len) {
        int m = 0;
        std::size_t i = 0;
        while (i < len && is_consonant(w, i)) {
            ++i;
        }
        while (i < len) {
            while (i < len && !is_consonant(w, i)) {
                ++i;
            }
            if (i >= len) {
                break;
            }
            while (i < len && is_consonant(w, i)) {
                ++i;
            }
            ++m;
        }
        return m;
    }

    static bool has_vowel(std::string_view w, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i) {
            if (!is_consonant(w, i)) {
                return true;
            }
        }
        return false;
    }

    static bool ends_double_consonant(std::string_view w, std::size_t len) {
        return len >= 2 && w[len - 1] == w[len - 2] && is_consonant(w, len - 1);
    }

    // *o: stem ends cvc, where the final c is not w, x or y.
    static bool ends_cvc(std::string_view w, std::size_t len) {
        if (len < 3) {
            return false;
        }
        if (!is_consonant(w, len - 1) || is_consonant(w, len - 2) || !is_consonant(w, len - 3)) {
            return false;
        }
        char c = w[len - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    static bool ends_with(std::string_view w, std::string_view s) {
        return w.size() >= s.size() && w.substr(w.size() - s.size()) == s;
    }

    static void replace_suffix(std::string& w, std::size_t suffix_len, std::string_view repl) {
        w.resize(w.size() - suffix_len);
        w += repl;
    }

    // Applies the first rule whose suffix matches, if its stem has m > min_measure.
    template <std::size_t N>
    static void apply_first(std::string& w, const std::array<Rule, N>& rules, int min_measure) {
        for (const auto& r : rules) {
            if (ends_with(w, r.suffix)) {
                if (measure(w, w.size() - r.suffix.size()) > min_measure) {
                    replace_suffix(w, r.suffix.size(), r.replacement);
                }
                return;
            }
        }
    }

    static void step1a(std::string& w) {
        if (ends_with(w, "sses")) {
            replace_suffix(w, 4, "ss");
        } else if (ends_with(w, "ies")) {
            replace_suffix(w, 3, "i");
        } else if (ends_with(w, "ss")) {
            // unchanged
        } else if (ends_with(w, "s")) {
            w.pop_back();
        }
    }

    static void step1b(std::string& w) {
        if (ends_with(w, "eed")) {
            if (measure(w, w.size() - 3) > 0) {
                w.pop_back();
            }
            return;
        }
        std::size_t cut = 0;
        if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
            cut = 2;
        } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
            cut = 3;
        }
        if (cut == 0) {
            return;
        }
        w.resize(w.size() - cut);
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
            w.push_back('e');
        } else if (ends_double_consonant(w, w.size())) {
            char c = w.back();
            if (c != 'l' && c != 's' && c != 'z') {
                w.pop_back();
            }
        } else if (measure(w, w.size()) == 1 && ends_cvc(w, w.size())) {
            w.push_back('e');
        }
    }

    static void step1c(std::string& w) {
        if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) {
            w.back() = 'i';
        }
    }

    static void step2(std::string& w) {
        static constexpr std::array<Rule, 20> rules{{
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
        }};
        apply_first(w, rules, 0);
    }

    static void step3(std::string& w) {
        static constexpr std::array<Rule, 7> rules{{
            {"icate", "ic"},
            {"ative", ""},
            {"alize", "al"},
            {"iciti", "ic"},
            {"ical", "ic"},
            {"ful", ""},
            {"ness", ""},
        }};
        apply_first(w, rules, 0);
    }

    static void step4(std::string& w) {
        static constexpr std::array<std::string_view, 19> suffixes{
            "al",   "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
            "ent",  "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize",
        };
        for (auto s : suffixes) {
            if (!ends_with(w, s)) {
                continue;
            }
            std::size_t stem = w.size() - s.size();
            bool ok = measure(w, stem) > 1;
            if (s == "ion") {
                ok = ok && stem > 0 && (w[stem - 1] == 's' || w[stem - 1] == 't');
            }
            if (ok) {
                w.resize(stem);
            }
            return;
        }
    }

    static void step5(std::string& w) {
        if (ends_with(w, "e")) {
            std::size_t stem = w.size() - 1;
            int m = measure(w, stem);
            if (m > 1 || (m == 1 && !ends_cvc(w, stem))) {
                w.pop_back();
            }
        }
        if (ends_with(w, "ll") && measure(w, w.size()) > 1) {
            w.pop_back();
        }
    }
};

}  // namespace qexp
