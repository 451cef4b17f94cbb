#include "sentqa/embedding.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include "sentqa/binary_io.hpp"
#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

namespace {

constexpr std::string_view kMagic = "SQEM";
constexpr std::uint32_t kVersion = 1;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<double> project(const Matrix& tower, const SparseVector& x) {
    std::vector<double> out(tower.cols(), 0.0);
    for (std::size_t i = 0; i < x.indices.size(); ++i) {
        const auto row = tower.row(x.indices[i]);
        const double w = x.values[i];
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += w * row[d];
    }
    return out;
}

}  // namespace

double SparseVector::norm() const {
    double s = 0.0;
    for (const double v : values) s += v * v;
    return std::sqrt(s);
}

EmbeddingVector EmbeddingVector::normalize(std::vector<double> raw) {
    double s = 0.0;
    for (const double v : raw) s += v * v;
    const double n = std::sqrt(s);
    if (!(n > 0.0) || !std::isfinite(n)) throw UnencodableError("zero or non-finite embedding");
    for (double& v : raw) v /= n;
    return EmbeddingVector(std::move(raw));
}

double relevance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void EncoderConfig::validate() const {
    if (dim < 2) throw InvalidInputError("encoder dim must be >= 2");
    if (buckets < dim) throw InvalidInputError("encoder buckets must be >= dim");
    if (buckets > (std::size_t{1} << 32)) throw InvalidInputError("encoder buckets must fit 32 bits");
    if (!(context_weight >= 0.0 && context_weight <= 1.0)) {
        throw InvalidInputError("context weight must lie in [0, 1]");
    }
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw InvalidInputError("temperature must be positive");
    }
}

std::uint64_t feature_hash(std::string_view gram, std::uint64_t seed) {
    std::uint64_t h = 0xCBF29CE484222325ull ^ splitmix64(seed);
    for (const char c : gram) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return splitmix64(h);
}

EncoderModel EncoderModel::initialize(const EncoderConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const double range = 1.0 / std::sqrt(static_cast<double>(config.buckets));
    const auto fill = [&](Matrix& m) {
        for (double& w : m.data()) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            w = (2.0 * u - 1.0) * range;
        }
    };
    Matrix answer(config.buckets, config.dim);
    Matrix question(config.buckets, config.dim);
    fill(answer);
    fill(question);
    return EncoderModel(config, std::move(answer), std::move(question));
}

EncoderModel::EncoderModel(const EncoderConfig& config, Matrix answer_tower, Matrix question_tower)
    : config_(config), answer_tower_(std::move(answer_tower)), question_tower_(std::move(question_tower)) {
    config_.validate();
    for (const Matrix* m : {&answer_tower_, &question_tower_}) {
        if (m->rows() != config_.buckets || m->cols() != config_.dim) {
            throw InvalidInputError("tower shape does not match buckets x dim");
        }
        for (const double w : m->data()) {
            if (!std::isfinite(w)) throw InvalidInputError("tower weights must be finite");
        }
    }
}

SparseVector EncoderModel::featurize(std::string_view text, std::size_t n_max) const {
    const auto tokens = text::analyze(text).tokens;
    std::map<std::uint32_t, double> counts;
    for (const auto& gram : text::ngrams(tokens, n_max)) {
        counts[static_cast<std::uint32_t>(feature_hash(gram, config_.seed) % config_.buckets)] += 1.0;
    }
    SparseVector x;
    x.indices.reserve(counts.size());
    x.values.reserve(counts.size());
    double s = 0.0;
    for (const auto& [idx, c] : counts) {
        x.indices.push_back(idx);
        x.values.push_back(c);
        s += c * c;
    }
    const double n = std::sqrt(s);
    for (double& v : x.values) v /= n;
    return x;
}

SparseVector EncoderModel::answer_features(std::string_view answer, std::string_view context) const {
    const SparseVector a = featurize(answer);
    if (config_.context_weight == 0.0 || context.empty()) return a;
    const SparseVector c = featurize(context);
    const double g = config_.context_weight;

    SparseVector out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.indices.size() || j < c.indices.size()) {
        if (j == c.indices.size() || (i < a.indices.size() && a.indices[i] < c.indices[j])) {
            out.indices.push_back(a.indices[i]);
            out.values.push_back(a.values[i++]);
        } else if (i == a.indices.size() || c.indices[j] < a.indices[i]) {
            out.indices.push_back(c.indices[j]);
            out.values.push_back(g * c.values[j++]);
        } else {
            out.indices.push_back(a.indices[i]);
            out.values.push_back(a.values[i++] + g * c.values[j++]);
        }
    }
    return out;
}

std::vector<double> EncoderModel::project_answer(const SparseVector& features) const {
    return project(answer_tower_, features);
}

std::vector<double> EncoderModel::project_question(const SparseVector& features) const {
    return project(question_tower_, features);
}

EmbeddingVector EncoderModel::encode_answer(std::string_view answer, std::string_view context) const {
    if (answer.empty()) throw InvalidInputError("answer must be non-empty");
    const auto x = answer_features(answer, context);
    if (x.empty()) throw UnencodableError("unencodable frame");
    try {
        return EmbeddingVector::normalize(project_answer(x));
    } catch (const UnencodableError&) {
        throw UnencodableError("unencodable frame");
    }
}

EmbeddingVector EncoderModel::encode_question(std::string_view question) const {
    const auto x = featurize(question);
    if (x.empty()) throw UnencodableError("unencodable question");
    try {
        return EmbeddingVector::normalize(project_question(x));
    } catch (const UnencodableError&) {
        throw UnencodableError("unencodable question");
    }
}

void EncoderModel::save(std::ostream& out) const {
    binio::write_magic(out, kMagic);
    binio::write_u32(out, kVersion);
    binio::write_u64(out, config_.dim);
    binio::write_u64(out, config_.buckets);
    binio::write_f64(out, config_.context_weight);
    binio::write_f64(out, config_.temperature);
    binio::write_u64(out, config_.seed);
    binio::write_f64_array(out, answer_tower_.data());
    binio::write_f64_array(out, question_tower_.data());
    if (!out) throw Error("failed writing model snapshot");
}

EncoderModel EncoderModel::load(std::istream& in) {
    binio::expect_magic(in, kMagic);
    if (const auto v = binio::read_u32(in); v != kVersion) {
        throw Error("unsupported model version " + std::to_string(v));
    }
    EncoderConfig config;
    config.dim = binio::read_u64(in);
    config.buckets = binio::read_u64(in);
    config.context_weight = binio::read_f64(in);
    config.temperature = binio::read_f64(in);
    config.seed = binio::read_u64(in);
    try {
        config.validate();
    } catch (const InvalidInputError& e) {
        throw Error(std::string("corrupt model header: ") + e.what());
    }
    if (config.dim > 4096 || config.buckets > (std::size_t{1} << 24)) {
        throw Error("corrupt model header: implausible shape");
    }
    Matrix answer(config.buckets, config.dim);
    Matrix question(config.buckets, config.dim);
    binio::read_f64_array(in, answer.data());
    binio::read_f64_array(in, question.data());
    return EncoderModel(config, std::move(answer), std::move(question));
}

void EncoderModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    save(out);
    if (!out.flush()) throw Error("failed writing '" + path.string() + "'");
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model '" + path.string() + "'");
    return load(in);
}

}  // namespace sentqa
