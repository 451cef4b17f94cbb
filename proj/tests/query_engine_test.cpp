#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sentqa/error.hpp"
#include "sentqa/query_engine.hpp"
#include "sentqa/suggest.hpp"
#include "test_support.hpp"

using namespace sentqa;
using sentqa::testing::make_frame;

namespace {

std::shared_ptr<const EncoderModel> shared(EncoderModel m) { return std::make_shared<const EncoderModel>(std::move(m)); }

std::vector<std::string> ids(const std::vector<QueryResult>& rs) {
    std::vector<std::string> out;
    for (const auto& r : rs) out.push_back(r.frame_id);
    return out;
}

// Scores every frame with y = pooled cosine + alpha * bm25 / max bm25.
std::vector<std::string> full_scan_oracle(const SearchIndex& index, const std::string& q, double alpha, std::size_t k) {
    const auto hq = index.model().encode_question(q);
    const auto n = index.frames().size();
    std::vector<double> bm(n);
    double max_bm = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bm[i] = index.lexical().bm25(q, i);
        max_bm = std::max(max_bm, bm[i]);
    }
    std::vector<std::pair<double, std::string>> scored;
    for (std::size_t i = 0; i < n; ++i) {
        double cos = index.vectors().group_size(i) == 0 ? 0.0 : -2.0;
        for (std::size_t m = 0; m < index.vectors().group_size(i); ++m) {
            cos = std::max(cos, relevance(index.vectors().vector(i, m), hq.values()));
        }
        scored.push_back({cos + alpha * (max_bm > 0 ? bm[i] / max_bm : 0.0), index.frames()[i].frame_id});
    }
    std::sort(scored.begin(), scored.end(), [](auto& a, auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
    return out;
}

}  // namespace

TEST(SearchIndex, RejectsMismatchedParts) {
    std::vector<Frame> frames{make_frame("a", "river stone"), make_frame("b", "graph layer")};
    auto model = shared(sentqa::testing::small_model());
    auto lexical = InvertedIndex::build(frames);
    auto vectors = VectorIndex::build(frames, *model);
    std::vector<Frame> one{frames[0]};
    EXPECT_THROW(SearchIndex(one, lexical, vectors, model), InvalidInputError);
    std::vector<Frame> dup{frames[0], frames[0]};
    EXPECT_THROW(SearchIndex(dup, lexical, vectors, model), InvalidInputError);
    EXPECT_NO_THROW(SearchIndex(frames, lexical, vectors, model));
}

TEST(Query, AlphaZeroEqualsDenseRanking) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 80), shared(sentqa::testing::small_model(rng())));
        const auto q = sentqa::testing::random_sentence(rng, 1, 4);
        QueryConfig cfg;
        cfg.alpha = 0;
        cfg.top_k = 80;
        const auto results = query(index, q, cfg);
        const auto dense = index.vectors().top_k_dense(index.model().encode_question(q), 80);
        ASSERT_EQ(results.size(), dense.size());
        for (std::size_t i = 0; i < dense.size(); ++i) {
            EXPECT_EQ(results[i].cosine_score, dense[i].score);
            if (i > 0 && dense[i].score == dense[i - 1].score) continue;  // tie order is by frame id
            EXPECT_EQ(results[i].frame_id, index.frames()[dense[i].ordinal].frame_id);
        }
    }
}

TEST(Query, ConstantModelEqualsBm25Ranking) {
    std::vector<Frame> frames;
    const std::vector<std::string> answers = {"cat sat mat", "dog sat", "cat cat cat", "bird sang loud", "cat dog",
                                              "river flows", "cat"};
    for (std::size_t i = 0; i < answers.size(); ++i) frames.push_back(make_frame("f" + std::to_string(i), answers[i]));
    const auto index = SearchIndex::build(frames, shared(sentqa::testing::constant_model()));
    QueryConfig cfg;
    cfg.alpha = 0.7;
    cfg.top_k = 3;
    const auto results = query(index, "cat sat", cfg);
    const auto lexical = index.lexical().top_m("cat sat", 3);
    ASSERT_EQ(results.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(results[i].frame_id, frames[lexical[i].ordinal].frame_id);
        EXPECT_NEAR(results[i].cosine_score, 1.0, 1e-12);
    }
}

TEST(Query, OnlyOverlappingFrameWinsWithEqualCosines) {
    const std::vector<Frame> frames{make_frame("a", "river flows"), make_frame("b", "graph layer"),
                                    make_frame("c", "stone wall")};
    const auto index = SearchIndex::build(frames, shared(sentqa::testing::constant_model()));
    for (const double alpha : {0.01, 0.3, 5.0}) {
        QueryConfig cfg;
        cfg.alpha = alpha;
        EXPECT_EQ(query(index, "graph theory", cfg).front().frame_id, "b");
    }
}

TEST(Query, MatchesExhaustiveEq2Oracle) {
    std::mt19937_64 rng(2);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 20), shared(sentqa::testing::small_model(3)));
    for (int i = 0; i < 30; ++i) {
        const auto q = sentqa::testing::random_sentence(rng, 1, 4);
        QueryConfig cfg;
        cfg.alpha = 0.3;
        cfg.top_k = 5;
        EXPECT_EQ(ids(query(index, q, cfg)), full_scan_oracle(index, q, 0.3, 5)) << q;
    }
}

TEST(Query, UnionEqualsExhaustiveWithSmallPools) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 15; ++trial) {
        const auto index =
            SearchIndex::build(sentqa::testing::random_frames(rng, 400), shared(sentqa::testing::small_model(rng())));
        for (int i = 0; i < 10; ++i) {
            const auto q = sentqa::testing::random_sentence(rng, 1, 4);
            QueryConfig pooled;
            pooled.top_k = 5;
            pooled.alpha = 0.1 * static_cast<double>(rng() % 30);
            pooled.dense_candidates = 5;
            pooled.lexical_candidates = 5;
            QueryConfig full = pooled;
            full.exhaustive = true;
            EXPECT_EQ(query(index, q, pooled), query(index, q, full));
        }
    }
}

TEST(Query, ResultInvariants) {
    std::mt19937_64 rng(4);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 100), shared(sentqa::testing::small_model()));
    QueryConfig cfg;
    cfg.top_k = 10;
    cfg.alpha = 0.4;
    const auto results = query(index, "neural graph layer", cfg);
    ASSERT_EQ(results.size(), 10u);
    double max_bm = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        EXPECT_NEAR(r.final_score, r.cosine_score + 0.4 * r.bm25_score, 1e-9);
        EXPECT_EQ(r.rank, i + 1);
        EXPECT_GE(r.bm25_score, 0.0);
        EXPECT_LE(r.bm25_score, 1.0);
        max_bm = std::max(max_bm, r.bm25_score);
        if (i > 0) {
            const auto& p = results[i - 1];
            EXPECT_TRUE(p.final_score > r.final_score || (p.final_score == r.final_score && p.frame_id < r.frame_id));
        }
    }
    EXPECT_EQ(query(index, "neural graph layer", cfg), results);
}

TEST(Query, RawBm25WhenNormalizationIsOff) {
    std::mt19937_64 rng(5);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 50), shared(sentqa::testing::small_model()));
    QueryConfig cfg;
    cfg.normalize_bm25 = false;
    cfg.alpha = 0.2;
    for (const auto& r : query(index, "cat dog", cfg)) {
        const auto ord = *index.ordinal_of(r.frame_id);
        EXPECT_DOUBLE_EQ(r.bm25_score, index.lexical().bm25("cat dog", ord));
    }
}

TEST(Query, RaisingAlphaKeepsOrderOfEqualBm25Frames) {
    std::mt19937_64 rng(6);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 60, 8), shared(sentqa::testing::small_model()));
    const std::string q = "cat dog";
    std::map<std::string, QueryResult> low, high;
    QueryConfig cfg;
    cfg.top_k = 60;
    cfg.exhaustive = true;
    cfg.alpha = 0.1;
    for (const auto& r : query(index, q, cfg)) low[r.frame_id] = r;
    cfg.alpha = 2.0;
    for (const auto& r : query(index, q, cfg)) high[r.frame_id] = r;
    for (const auto& [a, ra] : low) {
        for (const auto& [b, rb] : low) {
            if (a >= b || ra.bm25_score != rb.bm25_score) continue;
            EXPECT_EQ(ra.final_score > rb.final_score, high[a].final_score > high[b].final_score);
        }
    }
}

TEST(Query, DocFilterIsSound) {
    std::mt19937_64 rng(7);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 140), shared(sentqa::testing::small_model()));
    QueryConfig cfg;
    cfg.top_k = 50;
    cfg.doc_filter = std::set<std::string>{"doc1", "doc4"};
    const auto results = query(index, "river stone", cfg);
    EXPECT_FALSE(results.empty());
    for (const auto& r : results) EXPECT_TRUE(r.doc_id == "doc1" || r.doc_id == "doc4");
    cfg.doc_filter = std::set<std::string>{"nope"};
    EXPECT_THROW(query(index, "river stone", cfg), NotFoundError);
}

TEST(Query, UnanswerableQuery) {
    const auto index = SearchIndex::build({make_frame("a", "river flows")}, shared(sentqa::testing::small_model()));
    try {
        query(index, "", {});
        FAIL();
    } catch (const UnencodableError& e) {
        EXPECT_STREQ(e.what(), "unanswerable query");
    }
    EXPECT_THROW(query(index, "the of and", {}), UnencodableError);
}

TEST(Query, ConfigValidation) {
    const auto index = SearchIndex::build({make_frame("a", "river flows")}, shared(sentqa::testing::small_model()));
    QueryConfig cfg;
    cfg.top_k = 0;
    EXPECT_THROW(query(index, "river", cfg), InvalidInputError);
    cfg = {};
    cfg.alpha = -1;
    EXPECT_THROW(query(index, "river", cfg), InvalidInputError);
    cfg = {};
    cfg.top_k = 10;
    cfg.dense_candidates = 3;
    EXPECT_THROW(query(index, "river", cfg), InvalidInputError);
    EXPECT_EQ(QueryConfig{}.dense_pool(), 50u);
    QueryConfig big;
    big.top_k = 20;
    EXPECT_EQ(big.lexical_pool(), 100u);
}

TEST(Query, ReaderRefinesResults) {
    struct Truncate final : AnswerReader {
        void refine(std::string_view, std::vector<QueryResult>& results) const override { results.resize(1); }
    };
    std::mt19937_64 rng(8);
    const auto index = SearchIndex::build(sentqa::testing::random_frames(rng, 20), shared(sentqa::testing::small_model()));
    const Truncate reader;
    EXPECT_EQ(query(index, "cat", {}, &reader).size(), 1u);
    const PassThroughReader pass;
    EXPECT_EQ(query(index, "cat", {}, &pass), query(index, "cat", {}));
}

TEST(InDocSearch, OrderedByPositionWithScoreRanks) {
    Document d;
    d.doc_id = "paper";
    d.body = "Graph networks learn layer features. Rivers carry stone downstream. Neural layer stacks go deep. "
             "Clouds bring storm light.";
    auto frames = build_frames(d, 1);
    auto other = make_frame("x#1", "neural layer graph", {}, "x");
    frames.push_back(other);
    const auto index = SearchIndex::build(frames, shared(sentqa::testing::small_model()));
    QueryConfig cfg;
    const auto results = in_doc_search(index, "paper", "neural layer", cfg);
    ASSERT_EQ(results.size(), 4u);
    for (std::size_t i = 1; i < results.size(); ++i) EXPECT_LT(results[i - 1].char_start, results[i].char_start);

    cfg.doc_filter = std::set<std::string>{"paper"};
    std::set<std::pair<std::string, std::size_t>> by_score, by_position;
    for (const auto& r : query(index, "neural layer", cfg)) by_score.insert({r.frame_id, r.rank});
    for (const auto& r : results) by_position.insert({r.frame_id, r.rank});
    EXPECT_EQ(by_score, by_position);

    EXPECT_EQ(in_doc_search(index, "x", "neural", {}).size(), 1u);
    EXPECT_THROW(in_doc_search(index, "missing", "neural", {}), NotFoundError);
}

TEST(Suggest, PrefixMatchIsCaseInsensitive) {
    const std::vector<Frame> frames{make_frame("a", "x", {"What is LSTM?", "what is attention?"}),
                                    make_frame("b", "y", {"How does BERT work?"})};
    const auto s = SuggestionIndex::build(frames);
    const auto hits = s.suggest("what is l", 5);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0], "What is LSTM?");
    EXPECT_TRUE(s.suggest("zebra", 5).empty());
    EXPECT_THROW(s.suggest("what", 0), InvalidInputError);
}

TEST(Suggest, FrequencyThenLexicographic) {
    const std::vector<Frame> frames{make_frame("a", "x", {"what is b", "what is a"}),
                                    make_frame("b", "y", {"what is c", "What is C"})};
    const std::vector<std::string> extra{"what is c"};
    const auto s = SuggestionIndex::build(frames, extra);
    EXPECT_EQ(s.suggest("what", 10), (std::vector<std::string>{"what is c", "what is a", "what is b"}));
    EXPECT_EQ(s.suggest("", 2), (std::vector<std::string>{"what is c", "what is a"}));
    EXPECT_EQ(s.size(), 3u);
}

TEST(Suggest, RelatedSharesLeadingWordsAndSkipsItself) {
    const std::vector<Frame> frames{make_frame("a", "x", {"what is lstm", "what is gru", "how to train", "what are rnns"})};
    const auto s = SuggestionIndex::build(frames);
    const auto related = s.related("What is LSTM", 3);
    EXPECT_EQ(related, (std::vector<std::string>{"what is gru", "what are rnns", "how to train"}));
}
