#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentqa::text {

/// Analyzer output. `positions[i]` is the byte offset of `tokens[i]` in the
/// analyzed text.
struct TokenStream {
    std::vector<std::string> tokens;
    std::vector<std::size_t> positions;

    bool operator==(const TokenStream&) const = default;
};

/// Lowercases, splits on non-alphanumerics (hyphen and slash included) and
/// drops stopwords. No stemming.
TokenStream analyze(std::string_view text);

/// All contiguous n-grams for n = 1..n_max, unigrams first, joined with '_'.
std::vector<std::string> ngrams(std::span<const std::string> tokens, std::size_t n_max);

/// The 33-word minimal English stopword list.
const std::array<std::string_view, 33>& stopwords();
bool is_stopword(std::string_view token);

/// Simple case folding used for prefix matching.
std::string fold_case(std::string_view text);

// UTF-8 helpers. Invalid bytes decode as U+FFFD with length 1.
struct DecodedChar {
    char32_t code_point;
    std::size_t length;
};

DecodedChar decode_utf8(std::string_view text, std::size_t pos);
void append_utf8(std::string& out, char32_t cp);
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);
bool is_alnum(char32_t cp);
inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Maps an offset counted in code points to a byte offset. Offsets past the
/// end clamp to text.size().
std::size_t code_point_to_byte_offset(std::string_view text, std::size_t cp_offset);

}  // namespace sentqa::text
