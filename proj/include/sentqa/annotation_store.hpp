#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sentqa {

enum class AnnotationStatus { pending, validated, rejected };

std::string_view to_string(AnnotationStatus s);
/// Throws InvalidInputError on anything but pending|validated|rejected.
AnnotationStatus parse_status(std::string_view s);

/// A question a reader attached to a dragged span of a document. Offsets are
/// byte offsets into the document body, like frame offsets.
struct Annotation {
    std::string annotation_id;
    std::string doc_id;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string question;
    std::string created_at;
    AnnotationStatus status = AnnotationStatus::pending;

    bool operator==(const Annotation&) const = default;
};

nlohmann::ordered_json to_json(const Annotation& a);

/// Append-only JSONL log of annotation events, replayed into memory on open.
/// Every mutation is written and fsync'ed before it returns. A torn final
/// line (crash mid-append) is cut off on open; any other bad line is a
/// ParseError.
///
/// Log records:
///   {"op":"add", <annotation fields>}
///   {"op":"status", "annotation_id":..., "status":..., "at":...}
class AnnotationStore {
  public:
    /// Returns the current time as an ISO-8601 UTC string.
    using Clock = std::function<std::string()>;

    static std::string utc_now();

    explicit AnnotationStore(std::filesystem::path log_path, Clock clock = utc_now);
    ~AnnotationStore();

    AnnotationStore(const AnnotationStore&) = delete;
    AnnotationStore& operator=(const AnnotationStore&) = delete;

    /// Stores a new pending annotation with the next sequential id. Span and
    /// document checks are the caller's job.
    Annotation add(std::string doc_id, std::size_t char_start, std::size_t char_end, std::string question);

    /// Throws NotFoundError on an unknown id.
    Annotation set_status(std::string_view annotation_id, AnnotationStatus status);

    std::optional<Annotation> find(std::string_view annotation_id) const;
    /// In creation order.
    std::vector<Annotation> list(std::string_view doc_id) const;
    std::vector<Annotation> all() const;
    std::vector<Annotation> with_status(AnnotationStatus status) const;

    const std::filesystem::path& path() const { return path_; }

  private:
    void replay();
    void append(const nlohmann::ordered_json& record);

    std::filesystem::path path_;
    Clock clock_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::vector<Annotation> annotations_;
};

}  // namespace sentqa
