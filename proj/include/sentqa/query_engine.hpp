#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sentqa/corpus.hpp"
#include "sentqa/embedding.hpp"
#include "sentqa/lexical_index.hpp"
#include "sentqa/vector_index.hpp"

namespace sentqa {

/// Frames plus the lexical and dense indexes built over them with one model.
class SearchIndex {
  public:
    SearchIndex(std::vector<Frame> frames, InvertedIndex lexical, VectorIndex vectors,
                std::shared_ptr<const EncoderModel> model);

    static SearchIndex build(std::vector<Frame> frames, std::shared_ptr<const EncoderModel> model,
                             Bm25Params params = {});

    const std::vector<Frame>& frames() const { return frames_; }
    const InvertedIndex& lexical() const { return lexical_; }
    const VectorIndex& vectors() const { return vectors_; }
    const EncoderModel& model() const { return *model_; }
    std::shared_ptr<const EncoderModel> model_ptr() const { return model_; }

    bool has_document(std::string_view doc_id) const;
    /// Ordinals of a document's frames in corpus order; throws NotFoundError.
    const std::vector<std::size_t>& document_frames(std::string_view doc_id) const;
    std::optional<std::size_t> ordinal_of(std::string_view frame_id) const;

  private:
    std::vector<Frame> frames_;
    InvertedIndex lexical_;
    VectorIndex vectors_;
    std::shared_ptr<const EncoderModel> model_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> by_doc_;
    std::map<std::string, std::size_t, std::less<>> by_frame_id_;
};

struct QueryConfig {
    double alpha = 0.3;
    std::size_t top_k = 10;
    std::optional<std::size_t> dense_candidates;    // default max(50, 5 * top_k)
    std::optional<std::size_t> lexical_candidates;  // default max(50, 5 * top_k)
    std::optional<std::set<std::string>> doc_filter;
    bool normalize_bm25 = true;  // divide BM25 by the candidate pool maximum
    bool exhaustive = false;     // score every (filtered) frame instead of the pool

    std::size_t dense_pool() const;
    std::size_t lexical_pool() const;
    /// Throws InvalidInputError on alpha < 0, top_k == 0 or pools < top_k.
    void validate() const;
};

struct QueryResult {
    std::string frame_id;
    std::string doc_id;
    std::string answer;
    std::string context_before;
    std::string context_after;
    double cosine_score = 0.0;
    double bm25_score = 0.0;  // after normalization when enabled
    double final_score = 0.0;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::size_t rank = 0;  // 1-based position by final_score

    bool operator==(const QueryResult&) const = default;
};

/// Optional phrase-level post-processing over ranked sentence answers.
class AnswerReader {
  public:
    virtual ~AnswerReader() = default;
    virtual void refine(std::string_view query, std::vector<QueryResult>& results) const = 0;
};

class PassThroughReader final : public AnswerReader {
  public:
    void refine(std::string_view, std::vector<QueryResult>&) const override {}
};

/// Hybrid ranking: y = max-pooled cosine + alpha * bm25 over the union of the
/// dense and lexical candidate pools. The pools grow until no frame outside
/// them can reach the top K, so the result always equals exhaustive scoring.
///
/// Throws UnencodableError("unanswerable query") when the query has no
/// features, NotFoundError for an unknown doc in the filter.
std::vector<QueryResult> query(const SearchIndex& index, std::string_view q, const QueryConfig& cfg,
                               const AnswerReader* reader = nullptr);

/// query() restricted to one document, returned in document order with each
/// result keeping its score rank.
std::vector<QueryResult> in_doc_search(const SearchIndex& index, std::string_view doc_id,
                                       std::string_view q, QueryConfig cfg,
                                       const AnswerReader* reader = nullptr);

}  // namespace sentqa
