#include "sentqa/annotation_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "sentqa/error.hpp"

namespace sentqa {

namespace {

std::string format_id(std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ann-%06zu", n);
    return buf;
}

std::string sys_error(const std::string& what) { return what + ": " + std::strerror(errno); }

const nlohmann::json& field(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    return *it;
}

std::string string_field(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto& v = field(j, key, line);
    if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::size_t size_field(const nlohmann::json& j, const char* key, std::size_t line) {
    const auto& v = field(j, key, line);
    if (!v.is_number_unsigned()) {
        throw ParseError(line, std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

}  // namespace

std::string_view to_string(AnnotationStatus s) {
    switch (s) {
        case AnnotationStatus::pending: return "pending";
        case AnnotationStatus::validated: return "validated";
        case AnnotationStatus::rejected: return "rejected";
    }
    return "pending";
}

AnnotationStatus parse_status(std::string_view s) {
    if (s == "pending") return AnnotationStatus::pending;
    if (s == "validated") return AnnotationStatus::validated;
    if (s == "rejected") return AnnotationStatus::rejected;
    throw InvalidInputError("unknown annotation status '" + std::string(s) + "'");
}

nlohmann::ordered_json to_json(const Annotation& a) {
    nlohmann::ordered_json j;
    j["annotation_id"] = a.annotation_id;
    j["doc_id"] = a.doc_id;
    j["char_start"] = a.char_start;
    j["char_end"] = a.char_end;
    j["question"] = a.question;
    j["created_at"] = a.created_at;
    j["status"] = to_string(a.status);
    return j;
}

std::string AnnotationStore::utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

AnnotationStore::AnnotationStore(std::filesystem::path log_path, Clock clock)
    : path_(std::move(log_path)), clock_(std::move(clock)) {
    if (!clock_) clock_ = utc_now;
    replay();
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(sys_error("cannot open annotation log '" + path_.string() + "'"));
}

AnnotationStore::~AnnotationStore() {
    if (fd_ >= 0) ::close(fd_);
}

void AnnotationStore::replay() {
    std::error_code ec;
    if (!std::filesystem::exists(path_, ec)) return;

    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error("cannot read annotation log '" + path_.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string content = buf.str();
    in.close();

    const auto last_newline = content.rfind('\n');
    const std::size_t complete = last_newline == std::string::npos ? 0 : last_newline + 1;
    if (complete < content.size()) {
        std::filesystem::resize_file(path_, complete);
        content.resize(complete);
    }

    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
        const auto op = string_field(j, "op", line_no);
        if (op == "add") {
            Annotation a;
            a.annotation_id = string_field(j, "annotation_id", line_no);
            a.doc_id = string_field(j, "doc_id", line_no);
            a.char_start = size_field(j, "char_start", line_no);
            a.char_end = size_field(j, "char_end", line_no);
            a.question = string_field(j, "question", line_no);
            a.created_at = string_field(j, "created_at", line_no);
            try {
                a.status = parse_status(string_field(j, "status", line_no));
            } catch (const InvalidInputError& e) {
                throw ParseError(line_no, e.what());
            }
            for (const auto& other : annotations_) {
                if (other.annotation_id == a.annotation_id) throw DuplicateIdError(a.annotation_id, line_no);
            }
            annotations_.push_back(std::move(a));
        } else if (op == "status") {
            const auto id = string_field(j, "annotation_id", line_no);
            AnnotationStatus status;
            try {
                status = parse_status(string_field(j, "status", line_no));
            } catch (const InvalidInputError& e) {
                throw ParseError(line_no, e.what());
            }
            bool found = false;
            for (auto& a : annotations_) {
                if (a.annotation_id == id) {
                    a.status = status;
                    found = true;
                }
            }
            if (!found) throw ParseError(line_no, "status change for unknown annotation '" + id + "'");
        } else {
            throw ParseError(line_no, "unknown op '" + op + "'");
        }
    }
}

void AnnotationStore::append(const nlohmann::ordered_json& record) {
    const std::string line = record.dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
        const auto n = ::write(fd_, line.data() + written, line.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error(sys_error("annotation log write failed"));
        }
        written += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw Error(sys_error("annotation log fsync failed"));
}

Annotation AnnotationStore::add(std::string doc_id, std::size_t char_start, std::size_t char_end,
                                std::string question) {
    std::lock_guard lock(mutex_);
    Annotation a{format_id(annotations_.size() + 1), std::move(doc_id), char_start, char_end,
                 std::move(question), clock_(), AnnotationStatus::pending};
    const auto fields = to_json(a);
    nlohmann::ordered_json record;
    record["op"] = "add";
    for (const auto& [k, v] : fields.items()) record[k] = v;
    append(record);
    annotations_.push_back(a);
    return a;
}

Annotation AnnotationStore::set_status(std::string_view annotation_id, AnnotationStatus status) {
    std::lock_guard lock(mutex_);
    for (auto& a : annotations_) {
        if (a.annotation_id != annotation_id) continue;
        nlohmann::ordered_json record;
        record["op"] = "status";
        record["annotation_id"] = a.annotation_id;
        record["status"] = to_string(status);
        record["at"] = clock_();
        append(record);
        a.status = status;
        return a;
    }
    throw NotFoundError("unknown annotation '" + std::string(annotation_id) + "'");
}

std::optional<Annotation> AnnotationStore::find(std::string_view annotation_id) const {
    std::lock_guard lock(mutex_);
    for (const auto& a : annotations_) {
        if (a.annotation_id == annotation_id) return a;
    }
    return std::nullopt;
}

std::vector<Annotation> AnnotationStore::list(std::string_view doc_id) const {
    std::lock_guard lock(mutex_);
    std::vector<Annotation> out;
    for (const auto& a : annotations_) {
        if (a.doc_id == doc_id) out.push_back(a);
    }
    return out;
}

std::vector<Annotation> AnnotationStore::all() const {
    std::lock_guard lock(mutex_);
    return annotations_;
}

std::vector<Annotation> AnnotationStore::with_status(AnnotationStatus status) const {
    std::lock_guard lock(mutex_);
    std::vector<Annotation> out;
    for (const auto& a : annotations_) {
        if (a.status == status) out.push_back(a);
    }
    return out;
}

}  // namespace sentqa
