#include "sentqa/query_engine.hpp"

#include <algorithm>
#include <cmath>

#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

SearchIndex::SearchIndex(std::vector<Frame> frames, InvertedIndex lexical, VectorIndex vectors,
                         std::shared_ptr<const EncoderModel> model)
    : frames_(std::move(frames)),
      lexical_(std::move(lexical)),
      vectors_(std::move(vectors)),
      model_(std::move(model)) {
    if (!model_) throw InvalidInputError("search index needs a model");
    if (lexical_.n_frames() != frames_.size() || vectors_.group_count() != frames_.size()) {
        throw InvalidInputError("indexes were not built over the same corpus");
    }
    if (vectors_.dim() != model_->dim()) throw InvalidInputError("vector index dim differs from model");
    for (std::size_t i = 0; i < frames_.size(); ++i) {
        by_doc_[frames_[i].doc_id].push_back(i);
        if (!by_frame_id_.emplace(frames_[i].frame_id, i).second) {
            throw InvalidInputError("duplicate frame id '" + frames_[i].frame_id + "'");
        }
    }
}

SearchIndex SearchIndex::build(std::vector<Frame> frames, std::shared_ptr<const EncoderModel> model,
                               Bm25Params params) {
    auto lexical = InvertedIndex::build(frames, params);
    auto vectors = VectorIndex::build(frames, *model);
    return SearchIndex(std::move(frames), std::move(lexical), std::move(vectors), std::move(model));
}

bool SearchIndex::has_document(std::string_view doc_id) const { return by_doc_.contains(doc_id); }

const std::vector<std::size_t>& SearchIndex::document_frames(std::string_view doc_id) const {
    const auto it = by_doc_.find(doc_id);
    if (it == by_doc_.end()) throw NotFoundError("unknown document '" + std::string(doc_id) + "'");
    return it->second;
}

std::optional<std::size_t> SearchIndex::ordinal_of(std::string_view frame_id) const {
    const auto it = by_frame_id_.find(frame_id);
    if (it == by_frame_id_.end()) return std::nullopt;
    return it->second;
}

std::size_t QueryConfig::dense_pool() const {
    return dense_candidates.value_or(std::max<std::size_t>(50, 5 * top_k));
}

std::size_t QueryConfig::lexical_pool() const {
    return lexical_candidates.value_or(std::max<std::size_t>(50, 5 * top_k));
}

void QueryConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidInputError("alpha must be >= 0");
    if (top_k == 0) throw InvalidInputError("top_k must be >= 1");
    if (dense_pool() < top_k || lexical_pool() < top_k) {
        throw InvalidInputError("candidate pools must be at least top_k");
    }
}

namespace {

struct Candidate {
    std::size_t ordinal;
    double cosine;
    double bm25_raw;
    double bm25;
    double final_score;
};

bool candidate_before(const Candidate& a, const Candidate& b, const std::vector<Frame>& frames) {
    if (a.final_score != b.final_score) return a.final_score > b.final_score;
    return frames[a.ordinal].frame_id < frames[b.ordinal].frame_id;
}

class Scorer {
  public:
    Scorer(const SearchIndex& index, const std::vector<std::string>& terms,
           const EmbeddingVector& hq, const QueryConfig& cfg)
        : index_(index), terms_(terms), hq_(hq), cfg_(cfg) {}

    /// Scores and ranks `ordinals`; returns the BM25 divisor used.
    double score(const std::vector<std::size_t>& ordinals, std::vector<Candidate>& out) const {
        out.clear();
        out.reserve(ordinals.size());
        double max_bm25 = 0.0;
        for (const auto ord : ordinals) {
            const double cos = index_.vectors().frame_score(ord, hq_);
            const double bm = index_.lexical().bm25(terms_, ord);
            max_bm25 = std::max(max_bm25, bm);
            out.push_back({ord, cos, bm, 0.0, 0.0});
        }
        const double divisor = cfg_.normalize_bm25 ? max_bm25 : 1.0;
        for (auto& c : out) {
            c.bm25 = normalize(c.bm25_raw, divisor);
            c.final_score = c.cosine + cfg_.alpha * c.bm25;
        }
        const auto& frames = index_.frames();
        std::sort(out.begin(), out.end(),
                  [&](const Candidate& a, const Candidate& b) { return candidate_before(a, b, frames); });
        return divisor;
    }

    static double normalize(double bm25, double divisor) {
        return divisor > 0.0 ? bm25 / divisor : 0.0;
    }

  private:
    const SearchIndex& index_;
    const std::vector<std::string>& terms_;
    const EmbeddingVector& hq_;
    const QueryConfig& cfg_;
};

std::vector<std::size_t> merge_ordinals(const std::vector<ScoredFrame>& a,
                                        const std::vector<ScoredFrame>& b) {
    std::vector<std::size_t> out;
    out.reserve(a.size() + b.size());
    for (const auto& s : a) out.push_back(s.ordinal);
    for (const auto& s : b) out.push_back(s.ordinal);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace

std::vector<QueryResult> query(const SearchIndex& index, std::string_view q, const QueryConfig& cfg,
                               const AnswerReader* reader) {
    cfg.validate();
    const auto terms = text::analyze(q).tokens;
    EmbeddingVector hq;
    try {
        hq = index.model().encode_question(q);
    } catch (const UnencodableError&) {
        throw UnencodableError("unanswerable query");
    }

    std::optional<FrameSubset> subset;
    std::size_t allowed = index.frames().size();
    if (cfg.doc_filter) {
        subset.emplace(index.frames().size());
        for (const auto& doc : *cfg.doc_filter) {
            for (const auto ord : index.document_frames(doc)) subset->insert(ord);
        }
        allowed = subset->size();
    }
    const FrameSubset* filter = subset ? &*subset : nullptr;

    const Scorer scorer(index, terms, hq, cfg);
    std::vector<Candidate> ranked;
    if (cfg.exhaustive) {
        std::vector<std::size_t> all;
        for (std::size_t i = 0; i < index.frames().size(); ++i) {
            if (filter == nullptr || filter->contains(i)) all.push_back(i);
        }
        scorer.score(all, ranked);
    } else {
        std::size_t dense_k = std::min(cfg.dense_pool(), std::max<std::size_t>(allowed, 1));
        std::size_t lexical_m = cfg.lexical_pool();
        for (;;) {
            const auto dense = index.vectors().top_k_dense(hq, dense_k, filter);
            const auto lexical = index.lexical().top_m(terms, lexical_m, filter);
            const double divisor = scorer.score(merge_ordinals(dense, lexical), ranked);
            if (dense.size() >= allowed) break;  // every allowed frame is a candidate

            // Best score any frame outside both pools could reach.
            const double dense_floor = dense.back().score;
            const double lexical_floor = lexical.size() < lexical_m ? 0.0 : lexical.back().score;
            const double bound = dense_floor + cfg.alpha * Scorer::normalize(lexical_floor, divisor);
            if (ranked.size() >= cfg.top_k && ranked[cfg.top_k - 1].final_score > bound) break;
            dense_k = std::min(dense_k * 2, allowed);
            lexical_m *= 2;
        }
    }

    std::vector<QueryResult> results;
    const std::size_t keep = std::min(cfg.top_k, ranked.size());
    results.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& c = ranked[i];
        const Frame& f = index.frames()[c.ordinal];
        results.push_back({f.frame_id, f.doc_id, f.answer, f.context_before, f.context_after, c.cosine,
                           c.bm25, c.final_score, f.char_start, f.char_end, i + 1});
    }
    if (reader != nullptr) reader->refine(q, results);
    return results;
}

std::vector<QueryResult> in_doc_search(const SearchIndex& index, std::string_view doc_id,
                                       std::string_view q, QueryConfig cfg, const AnswerReader* reader) {
    if (!index.has_document(doc_id)) {
        throw NotFoundError("unknown document '" + std::string(doc_id) + "'");
    }
    cfg.doc_filter = std::set<std::string>{std::string(doc_id)};
    auto results = query(index, q, cfg, reader);
    std::stable_sort(results.begin(), results.end(), [](const QueryResult& a, const QueryResult& b) {
        return a.char_start < b.char_start;
    });
    return results;
}

}  // namespace sentqa
