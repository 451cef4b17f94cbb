#include "sentqa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

namespace {

using text::is_space;

constexpr std::string_view kAbbreviations[] = {
    "al.",   "fig.",  "figs.", "e.g.", "i.e.",  "cf.",     "vs.",   "eq.",  "eqs.",
    "sec.",  "tab.",  "no.",   "vol.", "pp.",   "dr.",     "mr.",   "mrs.", "ms.",
    "prof.", "resp.", "viz.",  "ref.", "refs.", "approx.", "chap.", "ch.",  "st.",
};

bool is_abbreviation(std::string_view text, std::size_t sentence_start, std::size_t period) {
    std::size_t begin = period;
    while (begin > sentence_start) {
        const char c = text[begin - 1];
        if (is_space(c) || c == '(' || c == '[' || c == '"') break;
        --begin;
    }
    const std::string word = text::fold_case(text.substr(begin, period + 1 - begin));
    return std::find(std::begin(kAbbreviations), std::end(kAbbreviations), word) !=
           std::end(kAbbreviations);
}

bool has_prefix_at(std::string_view text, std::size_t pos, std::string_view prefix) {
    return text.substr(pos, prefix.size()) == prefix;
}

// Closing quotes that stay attached to the sentence they end.
std::size_t absorb_closing_quotes(std::string_view text, std::size_t pos) {
    while (pos < text.size()) {
        if (text[pos] == '"' || text[pos] == '\'') {
            ++pos;
        } else if (has_prefix_at(text, pos, "”") || has_prefix_at(text, pos, "’")) {
            pos += 3;
        } else {
            break;
        }
    }
    return pos;
}

bool starts_sentence(std::string_view text, std::size_t pos) {
    if (text[pos] == '"' || text[pos] == '\'' || text[pos] == '(' || text[pos] == '[') {
        ++pos;
    } else if (has_prefix_at(text, pos, "“") || has_prefix_at(text, pos, "‘")) {
        pos += 3;
    }
    if (pos >= text.size()) return false;
    return text::is_upper(text::decode_utf8(text, pos).code_point);
}

std::size_t token_count(std::string_view s) { return text::analyze(s).tokens.size(); }

std::string join_spans(std::span<const SentenceSpan> spans) {
    std::string out;
    for (const auto& s : spans) {
        if (!out.empty()) out.push_back(' ');
        out += s.text;
    }
    return out;
}

nlohmann::ordered_json frame_to_json(const Frame& f) {
    nlohmann::ordered_json j;
    j["frame_id"] = f.frame_id;
    j["doc_id"] = f.doc_id;
    j["answer"] = f.answer;
    j["context_before"] = f.context_before;
    j["context_after"] = f.context_after;
    j["questions"] = f.questions;
    j["char_start"] = f.char_start;
    j["char_end"] = f.char_end;
    return j;
}

const nlohmann::json& require(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line, std::string("missing field '") + key + "'");
    return *it;
}

std::string require_string(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
}

std::size_t require_offset(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto& v = require(obj, key, line);
    if (!v.is_number_unsigned()) {
        throw ParseError(line, std::string("field '") + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

Frame frame_from_json(const nlohmann::json& j, std::size_t line) {
    if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
    Frame f;
    f.frame_id = require_string(j, "frame_id", line);
    f.doc_id = require_string(j, "doc_id", line);
    f.answer = require_string(j, "answer", line);
    f.context_before = require_string(j, "context_before", line);
    f.context_after = require_string(j, "context_after", line);
    const auto& qs = require(j, "questions", line);
    if (!qs.is_array()) throw ParseError(line, "field 'questions' must be an array");
    for (const auto& q : qs) {
        if (!q.is_string() || q.get_ref<const std::string&>().empty()) {
            throw ParseError(line, "questions must be non-empty strings");
        }
        f.questions.push_back(q.get<std::string>());
    }
    f.char_start = require_offset(j, "char_start", line);
    f.char_end = require_offset(j, "char_end", line);
    if (f.frame_id.empty()) throw ParseError(line, "empty frame_id");
    if (f.char_start >= f.char_end) throw ParseError(line, "char_start must be < char_end");
    return f;
}

Document document_from_json(const nlohmann::json& j, std::size_t line) {
    if (!j.is_object()) throw ParseError(line, "record is not a JSON object");
    Document d;
    d.doc_id = require_string(j, "doc_id", line);
    d.body = require_string(j, "body", line);
    if (const auto it = j.find("title"); it != j.end()) {
        if (!it->is_string()) throw ParseError(line, "field 'title' must be a string");
        d.title = it->get<std::string>();
    }
    if (const auto it = j.find("meta"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ParseError(line, "field 'meta' must be an object");
        for (const auto& [k, v] : it->items()) {
            d.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
    }
    if (d.doc_id.empty()) throw ParseError(line, "empty doc_id");
    if (d.body.empty()) throw ParseError(line, "empty body");
    return d;
}

template <typename Record, typename Parse, typename IdOf>
std::vector<Record> read_jsonl(std::istream& in, Parse parse, IdOf id_of) {
    std::vector<Record> out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); })) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        Record rec = parse(j, line_no);
        if (!seen.insert(id_of(rec)).second) throw DuplicateIdError(id_of(rec), line_no);
        out.push_back(std::move(rec));
    }
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

}  // namespace

std::vector<SentenceSpan> split_sentences(std::string_view text) {
    std::vector<SentenceSpan> out;
    const std::size_t n = text.size();
    const auto skip_space = [&](std::size_t p) {
        while (p < n && is_space(text[p])) ++p;
        return p;
    };
    const auto emit = [&](std::size_t begin, std::size_t end) {
        out.push_back({std::string(text.substr(begin, end - begin)), begin, end});
    };

    std::size_t start = skip_space(0);
    std::size_t pos = start;
    int depth = 0;
    while (pos < n) {
        const char c = text[pos];
        if (c == '(' || c == '[') {
            ++depth;
        } else if (c == ')' || c == ']') {
            if (depth > 0) --depth;
        } else if (c == '\n' && depth > 0 && pos + 1 < n && text[pos + 1] == '\n') {
            depth = 0;  // an unbalanced bracket never swallows a paragraph break
        } else if ((c == '.' || c == '!' || c == '?') && depth == 0) {
            std::size_t end = pos + 1;
            while (end < n && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
            end = absorb_closing_quotes(text, end);

            bool boundary = false;
            if (!(c == '.' && end == pos + 1 && is_abbreviation(text, start, pos))) {
                const std::size_t next = skip_space(end);
                boundary = next == n || (next > end && starts_sentence(text, next));
            }
            if (boundary) {
                emit(start, end);
                start = skip_space(end);
                pos = start;
            } else {
                pos = end;
            }
            continue;
        }
        ++pos;
    }
    if (start < n) {
        std::size_t end = n;
        while (end > start && is_space(text[end - 1])) --end;
        emit(start, end);
    }
    return out;
}

std::vector<Frame> build_frames(const Document& doc, std::size_t window) {
    if (doc.body.empty()) throw InvalidInputError("document '" + doc.doc_id + "' has an empty body");
    const auto spans = split_sentences(doc.body);
    if (spans.empty()) {
        throw InvalidInputError("document '" + doc.doc_id + "' has no sentences");
    }

    const std::string_view body = doc.body;
    const auto extend = [&](SentenceSpan& s, std::size_t new_end) {
        s.char_end = new_end;
        s.text = std::string(body.substr(s.char_start, s.char_end - s.char_start));
    };

    std::vector<SentenceSpan> units;
    for (std::size_t i = 0; i < spans.size(); ++i) {
        SentenceSpan cur = spans[i];
        while (token_count(cur.text) < kMinSentenceTokens && i + 1 < spans.size()) {
            extend(cur, spans[++i].char_end);
        }
        units.push_back(std::move(cur));
    }
    if (units.size() >= 2 && token_count(units.back().text) < kMinSentenceTokens) {
        const std::size_t end = units.back().char_end;
        units.pop_back();
        extend(units.back(), end);
    }

    std::vector<Frame> frames;
    frames.reserve(units.size());
    const std::span<const SentenceSpan> all(units);
    for (std::size_t i = 0; i < units.size(); ++i) {
        const std::size_t before = std::min(window, i);
        const std::size_t after = std::min(window, units.size() - i - 1);
        Frame f;
        f.frame_id = doc.doc_id + "#" + std::to_string(i + 1);
        f.doc_id = doc.doc_id;
        f.answer = units[i].text;
        f.context_before = join_spans(all.subspan(i - before, before));
        f.context_after = join_spans(all.subspan(i + 1, after));
        f.char_start = units[i].char_start;
        f.char_end = units[i].char_end;
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<Frame> read_corpus(std::istream& in) {
    return read_jsonl<Frame>(in, frame_from_json, [](const Frame& f) { return f.frame_id; });
}

void write_corpus(std::ostream& out, std::span<const Frame> frames) {
    for (const auto& f : frames) out << frame_to_json(f).dump() << '\n';
}

std::vector<Frame> load_corpus(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_corpus(in);
}

void save_corpus(std::span<const Frame> frames, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_corpus(out, frames);
    if (!out.flush()) throw Error("failed writing '" + path.string() + "'");
}

std::vector<Document> read_documents(std::istream& in) {
    return read_jsonl<Document>(in, document_from_json,
                                [](const Document& d) { return d.doc_id; });
}

void write_documents(std::ostream& out, std::span<const Document> docs) {
    for (const auto& d : docs) {
        nlohmann::ordered_json j;
        j["doc_id"] = d.doc_id;
        j["title"] = d.title;
        j["body"] = d.body;
        j["meta"] = d.meta;
        out << j.dump() << '\n';
    }
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_documents(in);
}

void save_documents(std::span<const Document> docs, const std::filesystem::path& path) {
    auto out = open_output(path);
    write_documents(out, docs);
    if (!out.flush()) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace sentqa
