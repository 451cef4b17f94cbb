#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentqa/corpus.hpp"

namespace sentqa {

/// Prefix index over known questions for autocompletion and FAQ lists.
/// Matching and deduplication are case-insensitive; each entry is shown in
/// its most frequent spelling. Immutable: rebuild to pick up new questions.
class SuggestionIndex {
  public:
    SuggestionIndex() = default;

    /// Questions from every frame's question set plus `extra`.
    static SuggestionIndex build(std::span<const Frame> frames,
                                 std::span<const std::string> extra = {});

    /// Case-insensitive prefix matches ranked by frequency desc, then text
    /// asc. An empty prefix lists the most frequent questions. Throws
    /// InvalidInputError when limit is 0.
    std::vector<std::string> suggest(std::string_view prefix, std::size_t limit) const;

    /// "You may also want to know": suggestions sharing the query's leading
    /// words, topped up with the FAQ list; never repeats the query itself.
    std::vector<std::string> related(std::string_view query, std::size_t limit) const;

    std::size_t size() const { return entries_.size(); }

  private:
    struct Entry {
        std::string key;      // folded text, sort key
        std::string display;  // most frequent original spelling
        std::size_t frequency = 0;
    };

    static bool ranks_before(const Entry& a, const Entry& b);

    std::vector<Entry> entries_;          // sorted by key
    std::vector<std::size_t> by_rank_;    // indices into entries_, ranked
};

}  // namespace sentqa
