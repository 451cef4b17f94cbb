#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sentqa/annotation_store.hpp"
#include "sentqa/corpus.hpp"
#include "sentqa/query_engine.hpp"
#include "sentqa/suggest.hpp"

namespace httplib {
class Server;
}

namespace sentqa {

/// One immutable generation of the searchable state. Requests grab the
/// current snapshot once and never observe a half-built index.
struct ServiceSnapshot {
    std::size_t generation = 0;
    std::shared_ptr<const SearchIndex> index;
    SuggestionIndex suggestions;
    std::size_t annotations_applied = 0;  // validated annotations merged into frames
};

struct ServiceOptions {
    QueryConfig query;  // defaults for top_k and alpha
    std::size_t suggest_limit = 10;
    std::size_t related_limit = 5;
};

struct ApiResponse {
    int status = 200;
    nlohmann::ordered_json body;
};

/// The /v1 HTTP API as plain member functions; bind() routes an httplib
/// server to them. Error bodies are {"error": message} with 400 for bad
/// input, 404 for unknown documents or annotations, 422 for unanswerable
/// queries.
class QaService {
  public:
    /// Frames must slice their documents exactly; throws InvalidInputError
    /// otherwise. Validated annotations already in the store are merged in.
    QaService(std::vector<Document> documents, std::vector<Frame> frames,
              std::shared_ptr<const EncoderModel> model, std::shared_ptr<AnnotationStore> store,
              ServiceOptions options = {});

    ApiResponse health() const;
    /// POST /v1/query {q, top_k?, alpha?, doc_filter?}
    ApiResponse query(std::string_view body) const;
    /// GET /v1/docs/{doc_id}/search?q=&top_k=&alpha=
    ApiResponse doc_search(std::string_view doc_id, const std::map<std::string, std::string>& params) const;
    /// GET /v1/docs/{doc_id}
    ApiResponse document(std::string_view doc_id) const;
    /// GET /v1/suggest?prefix=&limit=
    ApiResponse suggest(const std::map<std::string, std::string>& params) const;
    /// POST /v1/annotations {doc_id, char_start, char_end, question}
    ApiResponse add_annotation(std::string_view body);
    /// GET /v1/annotations?doc_id=
    ApiResponse list_annotations(const std::map<std::string, std::string>& params) const;
    /// POST /v1/annotations/{id}/status {status: validated|rejected}
    ApiResponse set_annotation_status(std::string_view annotation_id, std::string_view body);
    /// POST /v1/reindex: rebuilds both indexes with validated annotations.
    ApiResponse reindex();

    std::shared_ptr<const ServiceSnapshot> snapshot() const;

    void bind(httplib::Server& server);

  private:
    std::shared_ptr<const ServiceSnapshot> build_snapshot(std::size_t generation) const;
    const Document& find_document(std::string_view doc_id) const;

    std::vector<Document> documents_;
    std::map<std::string, std::size_t, std::less<>> doc_index_;
    std::vector<Frame> base_frames_;
    std::shared_ptr<const EncoderModel> model_;
    std::shared_ptr<AnnotationStore> store_;
    ServiceOptions options_;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const ServiceSnapshot> snapshot_;
    std::mutex reindex_mutex_;
};

/// Frames overlapping [char_start, char_end) of a document, in corpus order.
std::vector<std::size_t> covering_frames(std::span<const Frame> frames, std::string_view doc_id,
                                         std::size_t char_start, std::size_t char_end);

/// Adds each validated annotation's question to every frame its span
/// overlaps, skipping exact duplicates. Returns how many annotations reached
/// at least one frame.
std::size_t merge_annotations(std::vector<Frame>& frames, std::span<const Annotation> validated);

nlohmann::ordered_json to_json(const QueryResult& r);

}  // namespace sentqa
