#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentqa {

struct Document {
    std::string doc_id;
    std::string title;
    std::string body;
    std::map<std::string, std::string> meta;

    bool operator==(const Document&) const = default;
};

/// The retrieval unit: one answer sentence with its neighbours as context and
/// the questions associated with it. `answer == body.substr(char_start,
/// char_end - char_start)` of the owning document (byte offsets).
struct Frame {
    std::string frame_id;
    std::string doc_id;
    std::string answer;
    std::string context_before;
    std::string context_after;
    std::vector<std::string> questions;
    std::size_t char_start = 0;
    std::size_t char_end = 0;

    bool operator==(const Frame&) const = default;
};

struct SentenceSpan {
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0;

    bool operator==(const SentenceSpan&) const = default;
};

inline constexpr std::size_t kDefaultContextWindow = 2;
/// Sentences with fewer analyzer tokens than this are merged forward.
inline constexpr std::size_t kMinSentenceTokens = 3;

/// Splits on '.', '!' or '?' followed by whitespace and an uppercase letter
/// (optionally behind an opening quote or bracket), or by end of text.
/// Known abbreviations and bracketed spans never end a sentence. Returned
/// spans are trimmed; the gaps between them are whitespace only.
std::vector<SentenceSpan> split_sentences(std::string_view text);

/// One frame per sentence after short sentences are merged into their
/// successor. Frame ids are `doc_id + "#" + n` with n counted from 1.
/// Throws InvalidInputError on an empty body.
std::vector<Frame> build_frames(const Document& doc, std::size_t window = kDefaultContextWindow);

// Corpus JSONL: one frame per line.
std::vector<Frame> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const Frame> frames);
std::vector<Frame> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const Frame> frames, const std::filesystem::path& path);

// Document JSONL: {doc_id, title, body, meta}.
std::vector<Document> read_documents(std::istream& in);
void write_documents(std::ostream& out, std::span<const Document> docs);
std::vector<Document> load_documents(const std::filesystem::path& path);
void save_documents(std::span<const Document> docs, const std::filesystem::path& path);

}  // namespace sentqa
