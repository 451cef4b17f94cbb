#pragma once

#include <cstddef>
#include <vector>

namespace sentqa {

struct ScoredFrame {
    std::size_t ordinal = 0;
    double score = 0.0;

    bool operator==(const ScoredFrame&) const = default;
};

/// Score descending, ties by ascending ordinal.
inline bool ranks_before(const ScoredFrame& a, const ScoredFrame& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ordinal < b.ordinal;
}

/// Set of frame ordinals a retrieval is restricted to.
class FrameSubset {
  public:
    explicit FrameSubset(std::size_t n_frames) : member_(n_frames, false) {}

    void insert(std::size_t ordinal) {
        if (!member_[ordinal]) ++count_;
        member_[ordinal] = true;
    }
    bool contains(std::size_t ordinal) const {
        return ordinal < member_.size() && member_[ordinal];
    }
    std::size_t size() const { return count_; }

  private:
    std::vector<bool> member_;
    std::size_t count_ = 0;
};

}  // namespace sentqa
