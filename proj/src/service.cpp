#include "sentqa/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <httplib.h>

#include "sentqa/error.hpp"

namespace sentqa {

namespace {

using ordered_json = nlohmann::ordered_json;

ApiResponse error_response(int status, const std::string& message) {
    ordered_json body;
    body["error"] = message;
    return {status, std::move(body)};
}

template <typename F>
ApiResponse guarded(F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        return error_response(400, std::string("malformed JSON: ") + e.what());
    } catch (const InvalidInputError& e) {
        return error_response(400, e.what());
    } catch (const NotFoundError& e) {
        return error_response(404, e.what());
    } catch (const UnencodableError& e) {
        return error_response(422, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

nlohmann::json parse_object(std::string_view body) {
    auto j = nlohmann::json::parse(body.begin(), body.end());
    if (!j.is_object()) throw InvalidInputError("request body must be a JSON object");
    return j;
}

std::size_t positive_size(const nlohmann::json& v, const char* name) {
    if (!v.is_number_integer() || v.get<long long>() < 1) {
        throw InvalidInputError(std::string("'") + name + "' must be a positive integer");
    }
    return v.get<std::size_t>();
}

double non_negative(const nlohmann::json& v, const char* name) {
    if (!v.is_number() || !std::isfinite(v.get<double>()) || v.get<double>() < 0.0) {
        throw InvalidInputError(std::string("'") + name + "' must be a non-negative number");
    }
    return v.get<double>();
}

std::size_t size_param(std::string_view s, const char* name) {
    std::size_t out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size() || out == 0) {
        throw InvalidInputError(std::string("'") + name + "' must be a positive integer");
    }
    return out;
}

double number_param(const std::string& s, const char* name) {
    std::size_t used = 0;
    double out = -1.0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty() || !std::isfinite(out) || out < 0.0) {
        throw InvalidInputError(std::string("'") + name + "' must be a non-negative number");
    }
    return out;
}

const std::string* param(const std::map<std::string, std::string>& params, const std::string& key) {
    const auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
}

bool is_continuation_byte(const std::string& body, std::size_t pos) {
    return pos < body.size() && (static_cast<unsigned char>(body[pos]) & 0xC0) == 0x80;
}

std::string trimmed(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::map<std::string, std::string> first_values(const httplib::Params& params) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : params) out.emplace(k, v);
    return out;
}

void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
}

}  // namespace

nlohmann::ordered_json to_json(const QueryResult& r) {
    ordered_json j;
    j["frame_id"] = r.frame_id;
    j["doc_id"] = r.doc_id;
    j["answer"] = r.answer;
    j["context_before"] = r.context_before;
    j["context_after"] = r.context_after;
    j["cosine_score"] = r.cosine_score;
    j["bm25_score"] = r.bm25_score;
    j["final_score"] = r.final_score;
    j["char_start"] = r.char_start;
    j["char_end"] = r.char_end;
    j["rank"] = r.rank;
    return j;
}

std::vector<std::size_t> covering_frames(std::span<const Frame> frames, std::string_view doc_id,
                                         std::size_t char_start, std::size_t char_end) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.doc_id == doc_id && f.char_start < char_end && char_start < f.char_end) out.push_back(i);
    }
    return out;
}

std::size_t merge_annotations(std::vector<Frame>& frames, std::span<const Annotation> validated) {
    std::size_t applied = 0;
    for (const auto& a : validated) {
        const auto hits = covering_frames(frames, a.doc_id, a.char_start, a.char_end);
        if (hits.empty()) continue;
        ++applied;
        for (const auto i : hits) {
            auto& qs = frames[i].questions;
            if (std::find(qs.begin(), qs.end(), a.question) == qs.end()) qs.push_back(a.question);
        }
    }
    return applied;
}

QaService::QaService(std::vector<Document> documents, std::vector<Frame> frames,
                     std::shared_ptr<const EncoderModel> model, std::shared_ptr<AnnotationStore> store,
                     ServiceOptions options)
    : documents_(std::move(documents)),
      base_frames_(std::move(frames)),
      model_(std::move(model)),
      store_(std::move(store)),
      options_(std::move(options)) {
    if (!model_) throw InvalidInputError("service needs a model");
    if (!store_) throw InvalidInputError("service needs an annotation store");
    options_.query.validate();
    for (std::size_t i = 0; i < documents_.size(); ++i) {
        if (!doc_index_.emplace(documents_[i].doc_id, i).second) {
            throw InvalidInputError("duplicate document '" + documents_[i].doc_id + "'");
        }
    }
    for (const auto& f : base_frames_) {
        const auto it = doc_index_.find(f.doc_id);
        if (it == doc_index_.end()) {
            throw InvalidInputError("frame '" + f.frame_id + "' names unknown document '" + f.doc_id + "'");
        }
        const auto& body = documents_[it->second].body;
        if (f.char_end > body.size() || f.char_start >= f.char_end ||
            body.compare(f.char_start, f.char_end - f.char_start, f.answer) != 0) {
            throw InvalidInputError("frame '" + f.frame_id + "' does not match its document text");
        }
    }
    snapshot_ = build_snapshot(1);
}

std::shared_ptr<const ServiceSnapshot> QaService::build_snapshot(std::size_t generation) const {
    auto frames = base_frames_;
    const auto validated = store_->with_status(AnnotationStatus::validated);
    auto snap = std::make_shared<ServiceSnapshot>();
    snap->generation = generation;
    snap->annotations_applied = merge_annotations(frames, validated);
    snap->suggestions = SuggestionIndex::build(frames);
    snap->index = std::make_shared<const SearchIndex>(SearchIndex::build(std::move(frames), model_));
    return snap;
}

std::shared_ptr<const ServiceSnapshot> QaService::snapshot() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

const Document& QaService::find_document(std::string_view doc_id) const {
    const auto it = doc_index_.find(doc_id);
    if (it == doc_index_.end()) throw NotFoundError("unknown document '" + std::string(doc_id) + "'");
    return documents_[it->second];
}

ApiResponse QaService::health() const {
    const auto snap = snapshot();
    ordered_json body;
    body["status"] = "ok";
    body["generation"] = snap->generation;
    body["documents"] = documents_.size();
    body["frames"] = snap->index->frames().size();
    return {200, std::move(body)};
}

ApiResponse QaService::query(std::string_view raw) const {
    return guarded([&] {
        const auto req = parse_object(raw);
        const auto q = req.find("q");
        if (q == req.end() || !q->is_string()) throw InvalidInputError("'q' must be a string");
        QueryConfig cfg = options_.query;
        if (const auto it = req.find("top_k"); it != req.end() && !it->is_null()) {
            cfg.top_k = positive_size(*it, "top_k");
        }
        if (const auto it = req.find("alpha"); it != req.end() && !it->is_null()) {
            cfg.alpha = non_negative(*it, "alpha");
        }
        if (const auto it = req.find("doc_filter"); it != req.end() && !it->is_null()) {
            if (!it->is_array()) throw InvalidInputError("'doc_filter' must be an array of strings");
            std::set<std::string> docs;
            for (const auto& d : *it) {
                if (!d.is_string()) throw InvalidInputError("'doc_filter' must be an array of strings");
                docs.insert(d.get<std::string>());
            }
            cfg.doc_filter = std::move(docs);
        }
        const auto text = q->get<std::string>();
        const auto snap = snapshot();
        ordered_json body;
        body["results"] = ordered_json::array();
        for (const auto& r : sentqa::query(*snap->index, text, cfg)) body["results"].push_back(to_json(r));
        body["related"] = snap->suggestions.related(text, options_.related_limit);
        return ApiResponse{200, std::move(body)};
    });
}

ApiResponse QaService::doc_search(std::string_view doc_id,
                                  const std::map<std::string, std::string>& params) const {
    return guarded([&] {
        find_document(doc_id);
        const auto* q = param(params, "q");
        if (!q) throw InvalidInputError("missing query parameter 'q'");
        QueryConfig cfg = options_.query;
        if (const auto* k = param(params, "top_k")) cfg.top_k = size_param(*k, "top_k");
        if (const auto* a = param(params, "alpha")) cfg.alpha = number_param(*a, "alpha");
        const auto snap = snapshot();
        ordered_json body;
        body["doc_id"] = doc_id;
        body["results"] = ordered_json::array();
        for (const auto& r : in_doc_search(*snap->index, doc_id, *q, cfg)) body["results"].push_back(to_json(r));
        return ApiResponse{200, std::move(body)};
    });
}

ApiResponse QaService::document(std::string_view doc_id) const {
    return guarded([&] {
        const auto& doc = find_document(doc_id);
        const auto snap = snapshot();
        const auto& index = *snap->index;
        ordered_json body;
        body["doc_id"] = doc.doc_id;
        body["title"] = doc.title;
        body["body"] = doc.body;
        body["meta"] = doc.meta;
        body["frames"] = ordered_json::array();
        if (index.has_document(doc_id)) {
            for (const auto ord : index.document_frames(doc_id)) {
                const auto& f = index.frames()[ord];
                ordered_json jf;
                jf["frame_id"] = f.frame_id;
                jf["char_start"] = f.char_start;
                jf["char_end"] = f.char_end;
                jf["questions"] = f.questions;
                jf["group_size"] = index.vectors().group_size(ord);
                body["frames"].push_back(std::move(jf));
            }
        }
        return ApiResponse{200, std::move(body)};
    });
}

ApiResponse QaService::suggest(const std::map<std::string, std::string>& params) const {
    return guarded([&] {
        const auto* prefix = param(params, "prefix");
        std::size_t limit = options_.suggest_limit;
        if (const auto* l = param(params, "limit")) limit = size_param(*l, "limit");
        const auto snap = snapshot();
        ordered_json body = snap->suggestions.suggest(prefix ? *prefix : std::string(), limit);
        return ApiResponse{200, std::move(body)};
    });
}

ApiResponse QaService::add_annotation(std::string_view raw) {
    return guarded([&] {
        const auto req = parse_object(raw);
        const auto doc_it = req.find("doc_id");
        if (doc_it == req.end() || !doc_it->is_string()) throw InvalidInputError("'doc_id' must be a string");
        const auto q_it = req.find("question");
        if (q_it == req.end() || !q_it->is_string()) throw InvalidInputError("'question' must be a string");
        for (const char* key : {"char_start", "char_end"}) {
            const auto it = req.find(key);
            if (it == req.end() || !it->is_number_integer() || it->get<long long>() < 0) {
                throw InvalidInputError(std::string("'") + key + "' must be a non-negative integer");
            }
        }
        const auto doc_id = doc_it->get<std::string>();
        const auto start = req["char_start"].get<std::size_t>();
        const auto end = req["char_end"].get<std::size_t>();
        const auto question = trimmed(q_it->get<std::string>());

        const auto& doc = find_document(doc_id);
        if (end <= start) throw InvalidInputError("char_end must be greater than char_start");
        if (end > doc.body.size()) throw InvalidInputError("span exceeds the document length");
        if (is_continuation_byte(doc.body, start) || is_continuation_byte(doc.body, end)) {
            throw InvalidInputError("span splits a UTF-8 character");
        }
        if (question.empty()) throw InvalidInputError("question must be non-empty");
        if (model_->featurize(question).empty()) throw InvalidInputError("question has no searchable words");

        const auto a = store_->add(doc_id, start, end, question);
        return ApiResponse{200, to_json(a)};
    });
}

ApiResponse QaService::list_annotations(const std::map<std::string, std::string>& params) const {
    return guarded([&] {
        ordered_json body = ordered_json::array();
        if (const auto* doc_id = param(params, "doc_id")) {
            find_document(*doc_id);
            for (const auto& a : store_->list(*doc_id)) body.push_back(to_json(a));
        } else {
            for (const auto& a : store_->all()) body.push_back(to_json(a));
        }
        return ApiResponse{200, std::move(body)};
    });
}

ApiResponse QaService::set_annotation_status(std::string_view annotation_id, std::string_view raw) {
    return guarded([&] {
        const auto req = parse_object(raw);
        const auto it = req.find("status");
        if (it == req.end() || !it->is_string()) throw InvalidInputError("'status' must be a string");
        const auto status = parse_status(it->get<std::string>());
        if (status == AnnotationStatus::pending) throw InvalidInputError("status must be validated or rejected");
        return ApiResponse{200, to_json(store_->set_status(annotation_id, status))};
    });
}

ApiResponse QaService::reindex() {
    return guarded([&] {
        std::lock_guard serial(reindex_mutex_);
        auto next = build_snapshot(snapshot()->generation + 1);
        {
            std::lock_guard lock(snapshot_mutex_);
            snapshot_ = next;
        }
        ordered_json body;
        body["generation"] = next->generation;
        body["frames"] = next->index->frames().size();
        body["annotations_applied"] = next->annotations_applied;
        body["suggestions"] = next->suggestions.size();
        return ApiResponse{200, std::move(body)};
    });
}

void QaService::bind(httplib::Server& server) {
    server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) { send(res, health()); });
    server.Post("/v1/query",
                [this](const httplib::Request& req, httplib::Response& res) { send(res, query(req.body)); });
    server.Get(R"(/v1/docs/([^/]+)/search)", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, doc_search(req.matches[1].str(), first_values(req.params)));
    });
    server.Get(R"(/v1/docs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, document(req.matches[1].str()));
    });
    server.Get("/v1/suggest", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, suggest(first_values(req.params)));
    });
    server.Post("/v1/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, add_annotation(req.body));
    });
    server.Get("/v1/annotations", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, list_annotations(first_values(req.params)));
    });
    server.Post(R"(/v1/annotations/([^/]+)/status)", [this](const httplib::Request& req, httplib::Response& res) {
        send(res, set_annotation_status(req.matches[1].str(), req.body));
    });
    server.Post("/v1/reindex", [this](const httplib::Request&, httplib::Response& res) { send(res, reindex()); });
}

}  // namespace sentqa
