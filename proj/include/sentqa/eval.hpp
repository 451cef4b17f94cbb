#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sentqa/corpus.hpp"
#include "sentqa/query_engine.hpp"

namespace sentqa {

/// 1-based rank of the first relevant hit; nullopt when none was retrieved.
using Rank = std::optional<std::size_t>;

/// Mean of 1/rank with absent ranks counting 0. Throws on an empty list.
double mrr(std::span<const Rank> ranks);
/// Fraction of ranks <= k. Throws on an empty list.
double recall_at(std::span<const Rank> ranks, std::size_t k = 5);

struct EvalQuery {
    std::string id;
    std::string text;
    std::set<std::string> gold;  // frame ids
};

struct EvalDataset {
    std::vector<Document> documents;
    std::vector<Frame> frames;
    std::vector<EvalQuery> queries;
    std::size_t dropped_queries = 0;  // answers that overlap no frame

    /// Throws InvalidInputError if a gold id is unknown or a query has none.
    void validate() const;
};

/// Reading-comprehension interchange JSON:
///   {"data": [{"title": str, "paragraphs": [{"context": str,
///     "qas": [{"id": str, "question": str,
///              "answers": [{"text": str, "answer_start": int}]}]}]}]}
/// `answer_start` counts Unicode code points. Paragraph j of article i becomes
/// document "a<i>p<j>"; a query's gold frames are every frame overlapping any
/// of its answer spans.
EvalDataset parse_squad_style(const nlohmann::json& root, std::size_t window = kDefaultContextWindow);
EvalDataset load_squad_style(const std::filesystem::path& path,
                             std::size_t window = kDefaultContextWindow);

/// A named system under test: query text and depth in, ranked frame ids out.
struct Retriever {
    std::string name;
    std::function<std::vector<std::string>(const std::string& query, std::size_t depth)> search;
};

Retriever bm25_retriever(std::shared_ptr<const SearchIndex> index);
Retriever dense_retriever(std::shared_ptr<const SearchIndex> index);
Retriever hybrid_retriever(std::shared_ptr<const SearchIndex> index, QueryConfig cfg = {});
/// Returns each query's gold frames first; for harness checks.
Retriever oracle_retriever(const EvalDataset& dataset);

struct EvalOptions {
    std::size_t depth = 100;
    std::size_t k_report = 5;
    std::size_t threads = 1;
};

struct SystemEval {
    std::string name;
    double mrr = 0.0;
    double recall = 0.0;
    std::vector<Rank> ranks;  // aligned with dataset.queries
};

struct EvalReport {
    std::size_t n_documents = 0;
    std::size_t n_frames = 0;
    std::size_t n_queries = 0;
    std::size_t dropped_queries = 0;
    std::size_t depth = 0;
    std::size_t k_report = 0;
    std::vector<std::string> query_ids;
    std::vector<SystemEval> systems;

    const SystemEval& system(std::string_view name) const;
    /// Stable key order and number formatting; identical inputs give identical bytes.
    nlohmann::ordered_json to_json() const;
    /// Aligned text table: system x {MRR, R@k} plus corpus stats.
    std::string to_table() const;
};

/// Runs every system over every query. A system returning a frame id absent
/// from the dataset raises an error naming that system.
EvalReport run_eval(const EvalDataset& dataset, std::span<const Retriever> systems,
                    const EvalOptions& options = {});

}  // namespace sentqa
