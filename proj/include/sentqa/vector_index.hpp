#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sentqa/corpus.hpp"
#include "sentqa/embedding.hpp"
#include "sentqa/scoring.hpp"

namespace sentqa {

/// One vector group per frame: the answer embedding followed by one question
/// embedding per associated question. A frame's score against a query is the
/// max cosine over its group. Exact exhaustive search; immutable after build.
class VectorIndex {
  public:
    VectorIndex() = default;
    /// Throws InvalidInputError if any vector has the wrong length.
    VectorIndex(std::size_t dim, const std::vector<std::vector<EmbeddingVector>>& groups);

    /// Frames whose answer cannot be encoded keep only their question
    /// vectors; with no questions either they get an empty group, are listed
    /// in skipped() and score 0 (the zero-vector cosine).
    static VectorIndex build(std::span<const Frame> frames, const EncoderModel& model);

    /// Max cosine over the frame's group. Throws InvalidInputError on a bad ordinal.
    double frame_score(std::size_t ordinal, const EmbeddingVector& query) const;

    /// Exact top-k by frame_score, score desc then ordinal asc.
    std::vector<ScoredFrame> top_k_dense(const EmbeddingVector& query, std::size_t k,
                                         const FrameSubset* subset = nullptr) const;

    std::size_t dim() const { return dim_; }
    std::size_t group_count() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t group_size(std::size_t ordinal) const {
        return offsets_.at(ordinal + 1) - offsets_[ordinal];
    }
    std::span<const double> vector(std::size_t ordinal, std::size_t member) const;
    const std::vector<std::size_t>& skipped() const { return skipped_; }

    /// Header (magic, version, dim, n_groups), then per-group vector counts,
    /// then packed little-endian float64 vectors.
    void save(std::ostream& out) const;
    static VectorIndex load(std::istream& in);

    bool operator==(const VectorIndex&) const = default;

  private:
    double score_unchecked(std::size_t ordinal, std::span<const double> query) const;

    std::size_t dim_ = 0;
    std::vector<std::size_t> offsets_;  // group g spans vectors [offsets_[g], offsets_[g+1])
    std::vector<double> data_;
    std::vector<std::size_t> skipped_;
};

}  // namespace sentqa
