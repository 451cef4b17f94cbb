#include "sentqa/suggest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && text::is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && text::is_space(s.back())) s.remove_suffix(1);
    return s;
}

}  // namespace

bool SuggestionIndex::ranks_before(const Entry& a, const Entry& b) {
    if (a.frequency != b.frequency) return a.frequency > b.frequency;
    return a.display < b.display;
}

SuggestionIndex SuggestionIndex::build(std::span<const Frame> frames, std::span<const std::string> extra) {
    // key -> spelling -> count
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    const auto add = [&](std::string_view raw) {
        const auto q = trim(raw);
        if (q.empty()) return;
        ++counts[text::fold_case(q)][std::string(q)];
    };
    for (const auto& f : frames) {
        for (const auto& q : f.questions) add(q);
    }
    for (const auto& q : extra) add(q);

    SuggestionIndex index;
    index.entries_.reserve(counts.size());
    for (auto& [key, spellings] : counts) {
        Entry e{key, {}, 0};
        std::size_t best = 0;
        for (const auto& [spelling, n] : spellings) {
            e.frequency += n;
            if (n > best) {  // map order makes the lexicographically first spelling win ties
                best = n;
                e.display = spelling;
            }
        }
        index.entries_.push_back(std::move(e));
    }
    index.by_rank_.resize(index.entries_.size());
    for (std::size_t i = 0; i < index.by_rank_.size(); ++i) index.by_rank_[i] = i;
    std::sort(index.by_rank_.begin(), index.by_rank_.end(), [&](std::size_t a, std::size_t b) {
        return ranks_before(index.entries_[a], index.entries_[b]);
    });
    return index;
}

std::vector<std::string> SuggestionIndex::suggest(std::string_view prefix, std::size_t limit) const {
    if (limit == 0) throw InvalidInputError("suggestion limit must be >= 1");
    std::string folded = text::fold_case(prefix);
    folded.erase(0, folded.find_first_not_of(" \t\r\n"));
    if (folded.find_first_not_of(" \t\r\n") == std::string::npos) folded.clear();

    std::vector<std::string> out;
    if (folded.empty()) {
        for (std::size_t i = 0; i < by_rank_.size() && out.size() < limit; ++i) {
            out.push_back(entries_[by_rank_[i]].display);
        }
        return out;
    }

    const auto first = std::lower_bound(entries_.begin(), entries_.end(), folded,
                                        [](const Entry& e, const std::string& p) { return e.key < p; });
    std::vector<const Entry*> matches;
    for (auto it = first; it != entries_.end() && it->key.starts_with(folded); ++it) {
        matches.push_back(&*it);
    }
    const std::size_t keep = std::min(limit, matches.size());
    std::partial_sort(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(keep), matches.end(),
                      [](const Entry* a, const Entry* b) { return ranks_before(*a, *b); });
    for (std::size_t i = 0; i < keep; ++i) out.push_back(matches[i]->display);
    return out;
}

std::vector<std::string> SuggestionIndex::related(std::string_view query, std::size_t limit) const {
    if (limit == 0) throw InvalidInputError("suggestion limit must be >= 1");
    std::vector<std::string> words;
    std::istringstream in{std::string(query)};
    for (std::string w; in >> w && words.size() < 2;) words.push_back(w);

    const std::string self = text::fold_case(trim(query));
    std::set<std::string> seen{self};
    std::vector<std::string> out;
    const auto take = [&](const std::string& prefix) {
        for (auto& s : suggest(prefix, limit + seen.size())) {
            if (out.size() == limit) return;
            if (seen.insert(text::fold_case(s)).second) out.push_back(std::move(s));
        }
    };
    if (words.size() == 2) take(words[0] + " " + words[1] + " ");
    if (!words.empty()) take(words[0] + " ");
    take("");
    return out;
}

}  // namespace sentqa
