#include "sentqa/text_analysis.hpp"

#include <algorithm>

namespace sentqa::text {

namespace {

constexpr std::array<std::string_view, 33> kStopwords = {
    "a",    "an",   "and",   "are",   "as",   "at",    "be",   "but",  "by",
    "for",  "if",   "in",    "into",  "is",   "it",    "no",   "not",  "of",
    "on",   "or",   "such",  "that",  "the",  "their", "then", "there", "these",
    "they", "this", "to",    "was",   "will", "with",
};

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

const std::array<std::string_view, 33>& stopwords() { return kStopwords; }

bool is_stopword(std::string_view token) {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

DecodedChar decode_utf8(std::string_view text, std::size_t pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    const unsigned char lead = byte(pos);
    if (lead < 0x80) return {lead, 1};

    std::size_t len = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) {
        len = 2;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        len = 3;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        len = 4;
        cp = lead & 0x07;
    } else {
        return {kReplacement, 1};
    }
    if (pos + len > text.size()) return {kReplacement, 1};
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char cont = byte(pos + i);
        if ((cont & 0xC0) != 0x80) return {kReplacement, 1};
        cp = (cp << 6) | (cont & 0x3F);
    }
    // overlong forms and surrogates
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        return {kReplacement, 1};
    }
    return {cp, len};
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic. Every mapping
// keeps the UTF-8 byte length unchanged.
char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 0x20 : cp;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 &&
        cp != 0x17F) {
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

bool is_upper(char32_t cp) { return to_lower(cp) != cp; }

bool is_alnum(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    }
    if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;                // Latin-1 punctuation
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;                          // punctuation, symbols
    if (cp >= 0x3000 && cp <= 0x303F) return false;                          // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE6F) return false;                          // compatibility forms
    if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20)) return false;
    if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;                          // specials, U+FFFD
    if (cp == 0xFEFF) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;                        // emoji
    return true;
}

std::string fold_case(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t pos = 0; pos < text.size();) {
        const auto [cp, len] = decode_utf8(text, pos);
        if (cp == kReplacement && len == 1 && static_cast<unsigned char>(text[pos]) >= 0x80) {
            out.push_back(text[pos]);  // keep invalid bytes as-is
        } else {
            append_utf8(out, to_lower(cp));
        }
        pos += len;
    }
    return out;
}

TokenStream analyze(std::string_view text) {
    TokenStream stream;
    std::string current;
    std::size_t start = 0;

    const auto flush = [&] {
        if (!current.empty() && !is_stopword(current)) {
            stream.tokens.push_back(std::move(current));
            stream.positions.push_back(start);
        }
        current.clear();
    };

    for (std::size_t pos = 0; pos < text.size();) {
        const auto [cp, len] = decode_utf8(text, pos);
        if (is_alnum(cp)) {
            if (current.empty()) start = pos;
            append_utf8(current, to_lower(cp));
        } else {
            flush();
        }
        pos += len;
    }
    flush();
    return stream;
}

std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t n_max) {
    std::vector<std::string> out;
    for (std::size_t n = 1; n <= n_max && n <= tokens.size(); ++n) {
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram = tokens[i];
            for (std::size_t j = 1; j < n; ++j) {
                gram.push_back('_');
                gram += tokens[i + j];
            }
            out.push_back(std::move(gram));
        }
    }
    return out;
}

std::size_t code_point_to_byte_offset(std::string_view text, std::size_t cp_offset) {
    std::size_t pos = 0;
    for (std::size_t n = 0; n < cp_offset && pos < text.size(); ++n) {
        pos += decode_utf8(text, pos).length;
    }
    return std::min(pos, text.size());
}

}  // namespace sentqa::text
