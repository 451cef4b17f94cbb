#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentqa/corpus.hpp"
#include "sentqa/scoring.hpp"

namespace sentqa {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    bool operator==(const Bm25Params&) const = default;
};

struct Posting {
    std::uint32_t frame = 0;
    std::uint32_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// Okapi BM25 over the analyzed answer sentence of each frame. Ordinals follow
/// the input frame order. Immutable once built.
class InvertedIndex {
  public:
    /// Throws InvalidInputError on an empty frame list.
    static InvertedIndex build(std::span<const Frame> frames, Bm25Params params = {});

    /// Sum over query terms (repeats included) of idf(t) * tf * (k1 + 1) /
    /// (tf + k1 * (1 - b + b * len / avg_len)), idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
    double bm25(std::string_view query, std::size_t ordinal) const;
    double bm25(std::span<const std::string> query_terms, std::size_t ordinal) const;

    /// At most m frames with positive score, score desc then ordinal asc.
    std::vector<ScoredFrame> top_m(std::string_view query, std::size_t m,
                                   const FrameSubset* subset = nullptr) const;
    std::vector<ScoredFrame> top_m(std::span<const std::string> query_terms, std::size_t m,
                                   const FrameSubset* subset = nullptr) const;

    double idf(std::string_view term) const;
    std::size_t df(std::string_view term) const;
    std::span<const Posting> postings(std::string_view term) const;

    std::size_t n_frames() const { return doc_len_.size(); }
    std::size_t n_terms() const { return postings_.size(); }
    std::size_t doc_len(std::size_t ordinal) const { return doc_len_.at(ordinal); }
    double avg_len() const { return avg_len_; }
    const Bm25Params& params() const { return params_; }

    void save(std::ostream& out) const;
    static InvertedIndex load(std::istream& in);

    bool operator==(const InvertedIndex&) const = default;

  private:
    double term_weight(double idf, std::uint32_t tf, std::size_t ordinal) const;

    std::map<std::string, std::vector<Posting>, std::less<>> postings_;
    std::vector<std::uint32_t> doc_len_;
    double avg_len_ = 0.0;
    Bm25Params params_;
};

}  // namespace sentqa
