#include "sentqa/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "sentqa/binary_io.hpp"
#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

namespace {
constexpr std::string_view kMagic = "SQLX";
constexpr std::uint32_t kVersion = 1;
}  // namespace

InvertedIndex InvertedIndex::build(std::span<const Frame> frames, Bm25Params params) {
    if (frames.empty()) throw InvalidInputError("cannot build a lexical index over zero frames");
    InvertedIndex index;
    index.params_ = params;
    index.doc_len_.reserve(frames.size());

    std::uint64_t total = 0;
    for (std::size_t ord = 0; ord < frames.size(); ++ord) {
        const auto stream = text::analyze(frames[ord].answer);
        std::map<std::string_view, std::uint32_t> tf;
        for (const auto& t : stream.tokens) ++tf[t];
        for (const auto& [term, count] : tf) {
            auto it = index.postings_.find(term);
            if (it == index.postings_.end()) {
                it = index.postings_.emplace(std::string(term), std::vector<Posting>{}).first;
            }
            it->second.push_back({static_cast<std::uint32_t>(ord), count});
        }
        index.doc_len_.push_back(static_cast<std::uint32_t>(stream.tokens.size()));
        total += stream.tokens.size();
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(frames.size());
    return index;
}

std::span<const Posting> InvertedIndex::postings(std::string_view term) const {
    const auto it = postings_.find(term);
    if (it == postings_.end()) return {};
    return it->second;
}

std::size_t InvertedIndex::df(std::string_view term) const { return postings(term).size(); }

double InvertedIndex::idf(std::string_view term) const {
    const double n = static_cast<double>(n_frames());
    const double d = static_cast<double>(df(term));
    return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double InvertedIndex::term_weight(double idf, std::uint32_t tf, std::size_t ordinal) const {
    const double f = static_cast<double>(tf);
    // avg_len is positive whenever any posting exists
    const double norm = 1.0 - params_.b + params_.b * doc_len_[ordinal] / avg_len_;
    return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * norm);
}

double InvertedIndex::bm25(std::string_view query, std::size_t ordinal) const {
    return bm25(text::analyze(query).tokens, ordinal);
}

double InvertedIndex::bm25(std::span<const std::string> query_terms, std::size_t ordinal) const {
    if (ordinal >= n_frames()) {
        throw InvalidInputError("frame ordinal " + std::to_string(ordinal) + " out of range");
    }
    double score = 0.0;
    for (const auto& term : query_terms) {
        const auto list = postings(term);
        const auto it = std::lower_bound(
            list.begin(), list.end(), ordinal,
            [](const Posting& p, std::size_t ord) { return p.frame < ord; });
        if (it == list.end() || it->frame != ordinal) continue;
        score += term_weight(idf(term), it->tf, ordinal);
    }
    return score;
}

std::vector<ScoredFrame> InvertedIndex::top_m(std::string_view query, std::size_t m,
                                              const FrameSubset* subset) const {
    return top_m(text::analyze(query).tokens, m, subset);
}

std::vector<ScoredFrame> InvertedIndex::top_m(std::span<const std::string> query_terms,
                                              std::size_t m, const FrameSubset* subset) const {
    if (m == 0) throw InvalidInputError("top_m requires m >= 1");
    std::vector<double> acc(n_frames(), 0.0);
    std::vector<char> seen(n_frames(), 0);
    std::vector<std::size_t> touched;
    for (const auto& term : query_terms) {
        const auto list = postings(term);
        if (list.empty()) continue;
        const double w = idf(term);
        for (const auto& p : list) {
            if (subset != nullptr && !subset->contains(p.frame)) continue;
            if (!seen[p.frame]) {
                seen[p.frame] = 1;
                touched.push_back(p.frame);
            }
            acc[p.frame] += term_weight(w, p.tf, p.frame);
        }
    }

    std::vector<ScoredFrame> hits;
    hits.reserve(touched.size());
    for (const auto ord : touched) {
        if (acc[ord] > 0.0) hits.push_back({ord, acc[ord]});
    }
    const std::size_t keep = std::min(m, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      ranks_before);
    hits.resize(keep);
    return hits;
}

void InvertedIndex::save(std::ostream& out) const {
    binio::write_magic(out, kMagic);
    binio::write_u32(out, kVersion);
    binio::write_f64(out, params_.k1);
    binio::write_f64(out, params_.b);
    binio::write_u64(out, doc_len_.size());
    for (const auto len : doc_len_) binio::write_u32(out, len);
    binio::write_u64(out, postings_.size());
    for (const auto& [term, list] : postings_) {
        binio::write_string(out, term);
        binio::write_u64(out, list.size());
        for (const auto& p : list) {
            binio::write_u32(out, p.frame);
            binio::write_u32(out, p.tf);
        }
    }
    if (!out) throw Error("failed writing lexical index snapshot");
}

InvertedIndex InvertedIndex::load(std::istream& in) {
    binio::expect_magic(in, kMagic);
    if (const auto v = binio::read_u32(in); v != kVersion) {
        throw Error("unsupported lexical index version " + std::to_string(v));
    }
    InvertedIndex index;
    index.params_.k1 = binio::read_f64(in);
    index.params_.b = binio::read_f64(in);
    const auto n = binio::read_u64(in);
    if (n == 0 || n > (1ull << 32)) throw Error("corrupt lexical index: frame count");
    index.doc_len_.resize(n);
    std::uint64_t total = 0;
    for (auto& len : index.doc_len_) {
        len = binio::read_u32(in);
        total += len;
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(n);

    const auto n_terms = binio::read_u64(in);
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        auto term = binio::read_string(in);
        const auto count = binio::read_u64(in);
        if (count == 0 || count > n) throw Error("corrupt lexical index: posting count");
        std::vector<Posting> list(count);
        for (auto& p : list) {
            p.frame = binio::read_u32(in);
            p.tf = binio::read_u32(in);
            if (p.frame >= n || p.tf == 0) throw Error("corrupt lexical index: posting");
        }
        index.postings_.emplace(std::move(term), std::move(list));
    }
    return index;
}

}  // namespace sentqa
