#include "sentqa/vector_index.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "sentqa/binary_io.hpp"
#include "sentqa/error.hpp"

namespace sentqa {

namespace {
constexpr std::string_view kMagic = "SQVX";
constexpr std::uint32_t kVersion = 1;
}  // namespace

VectorIndex::VectorIndex(std::size_t dim, const std::vector<std::vector<EmbeddingVector>>& groups)
    : dim_(dim) {
    offsets_.reserve(groups.size() + 1);
    offsets_.push_back(0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (const auto& v : groups[g]) {
            if (v.dim() != dim) throw InvalidInputError("vector length does not match index dim");
            data_.insert(data_.end(), v.values().begin(), v.values().end());
        }
        offsets_.push_back(offsets_.back() + groups[g].size());
        if (groups[g].empty()) skipped_.push_back(g);
    }
}

VectorIndex VectorIndex::build(std::span<const Frame> frames, const EncoderModel& model) {
    std::vector<std::vector<EmbeddingVector>> groups(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        try {
            std::string context = f.context_before;
            if (!context.empty() && !f.context_after.empty()) context.push_back(' ');
            context += f.context_after;
            groups[i].push_back(model.encode_answer(f.answer, context));
        } catch (const UnencodableError&) {
        }
        for (const auto& q : f.questions) {
            try {
                groups[i].push_back(model.encode_question(q));
            } catch (const UnencodableError&) {
            }
        }
    }
    return VectorIndex(model.dim(), groups);
}

std::span<const double> VectorIndex::vector(std::size_t ordinal, std::size_t member) const {
    if (member >= group_size(ordinal)) throw InvalidInputError("group member out of range");
    return {data_.data() + (offsets_[ordinal] + member) * dim_, dim_};
}

double VectorIndex::score_unchecked(std::size_t ordinal, std::span<const double> query) const {
    const std::size_t begin = offsets_[ordinal];
    const std::size_t end = offsets_[ordinal + 1];
    if (begin == end) return 0.0;
    double best = -2.0;
    for (std::size_t v = begin; v < end; ++v) {
        best = std::max(best, relevance(std::span(data_.data() + v * dim_, dim_), query));
    }
    return best;
}

double VectorIndex::frame_score(std::size_t ordinal, const EmbeddingVector& query) const {
    if (ordinal >= group_count()) {
        throw InvalidInputError("frame ordinal " + std::to_string(ordinal) + " out of range");
    }
    if (query.dim() != dim_) throw InvalidInputError("query dim does not match index dim");
    return score_unchecked(ordinal, query.values());
}

std::vector<ScoredFrame> VectorIndex::top_k_dense(const EmbeddingVector& query, std::size_t k,
                                                  const FrameSubset* subset) const {
    if (k == 0) throw InvalidInputError("top_k_dense requires k >= 1");
    if (query.dim() != dim_) throw InvalidInputError("query dim does not match index dim");
    std::vector<ScoredFrame> all;
    all.reserve(subset != nullptr ? subset->size() : group_count());
    for (std::size_t g = 0; g < group_count(); ++g) {
        if (subset != nullptr && !subset->contains(g)) continue;
        all.push_back({g, score_unchecked(g, query.values())});
    }
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                      ranks_before);
    all.resize(keep);
    return all;
}

void VectorIndex::save(std::ostream& out) const {
    binio::write_magic(out, kMagic);
    binio::write_u32(out, kVersion);
    binio::write_u64(out, dim_);
    binio::write_u64(out, group_count());
    for (std::size_t g = 0; g < group_count(); ++g) binio::write_u64(out, group_size(g));
    binio::write_f64_array(out, data_);
    if (!out) throw Error("failed writing vector index snapshot");
}

VectorIndex VectorIndex::load(std::istream& in) {
    binio::expect_magic(in, kMagic);
    if (const auto v = binio::read_u32(in); v != kVersion) {
        throw Error("unsupported vector index version " + std::to_string(v));
    }
    VectorIndex index;
    index.dim_ = binio::read_u64(in);
    const auto n_groups = binio::read_u64(in);
    if (index.dim_ < 2 || index.dim_ > 4096 || n_groups > (1ull << 32)) {
        throw Error("corrupt vector index header");
    }
    index.offsets_.reserve(n_groups + 1);
    index.offsets_.push_back(0);
    for (std::uint64_t g = 0; g < n_groups; ++g) {
        const auto count = binio::read_u64(in);
        if (count > (1u << 20)) throw Error("corrupt vector index: group size");
        index.offsets_.push_back(index.offsets_.back() + count);
        if (count == 0) index.skipped_.push_back(g);
    }
    index.data_.resize(index.offsets_.back() * index.dim_);
    binio::read_f64_array(in, index.data_);
    return index;
}

}  // namespace sentqa
