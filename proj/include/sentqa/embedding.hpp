#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace sentqa {

/// Sparse vector with strictly increasing indices.
struct SparseVector {
    std::vector<std::uint32_t> indices;
    std::vector<double> values;

    bool empty() const { return indices.empty(); }
    double norm() const;

    bool operator==(const SparseVector&) const = default;
};

/// Dense vector with unit L2 norm. Only constructible through `normalize`.
class EmbeddingVector {
  public:
    EmbeddingVector() = default;

    /// Throws UnencodableError when `raw` is zero or non-finite.
    static EmbeddingVector normalize(std::vector<double> raw);

    std::span<const double> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

  private:
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

    std::vector<double> values_;
};

/// Cosine of two unit vectors, i.e. their dot product.
double relevance(std::span<const double> a, std::span<const double> b);
inline double relevance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return relevance(a.values(), b.values());
}

/// Row-major dense matrix.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool operator==(const Matrix&) const = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct EncoderConfig {
    std::size_t dim = 128;
    std::size_t buckets = std::size_t{1} << 18;
    double context_weight = 0.5;  // gamma
    double temperature = 10.0;
    std::uint64_t seed = 42;

    /// Throws InvalidInputError unless dim >= 2, buckets >= dim, gamma in
    /// [0, 1] and tau > 0.
    void validate() const;

    bool operator==(const EncoderConfig&) const = default;
};

/// Seeded 64-bit hash of one n-gram (FNV-1a with a splitmix64 finalizer).
std::uint64_t feature_hash(std::string_view gram, std::uint64_t seed);

/// Dual encoder: hashed bag-of-n-grams features followed by one linear
/// projection per tower. Answers go through the answer tower together with
/// their context, questions through the question tower.
class EncoderModel {
  public:
    /// Towers drawn iid from uniform(-1/sqrt(buckets), +1/sqrt(buckets)).
    static EncoderModel initialize(const EncoderConfig& config);

    EncoderModel(const EncoderConfig& config, Matrix answer_tower, Matrix question_tower);

    /// Counts of each 1..n_max-gram of analyze(text) at hash mod buckets,
    /// L2-normalized. Empty text gives the zero vector.
    SparseVector featurize(std::string_view text, std::size_t n_max = 2) const;
    /// featurize(answer) + gamma * featurize(context).
    SparseVector answer_features(std::string_view answer, std::string_view context) const;

    std::vector<double> project_answer(const SparseVector& features) const;
    std::vector<double> project_question(const SparseVector& features) const;

    /// Throws UnencodableError("unencodable frame") when the combined features
    /// or their projection are zero.
    EmbeddingVector encode_answer(std::string_view answer, std::string_view context) const;
    EmbeddingVector encode_question(std::string_view question) const;

    const EncoderConfig& config() const { return config_; }
    std::size_t dim() const { return config_.dim; }
    std::size_t buckets() const { return config_.buckets; }

    const Matrix& answer_tower() const { return answer_tower_; }
    const Matrix& question_tower() const { return question_tower_; }
    Matrix& answer_tower() { return answer_tower_; }
    Matrix& question_tower() { return question_tower_; }

    /// Header (magic, version, dim, buckets, gamma, tau, seed) followed by both
    /// towers row-major as little-endian float64.
    void save(std::ostream& out) const;
    static EncoderModel load(std::istream& in);
    void save(const std::filesystem::path& path) const;
    static EncoderModel load(const std::filesystem::path& path);

    bool operator==(const EncoderModel&) const = default;

  private:
    EncoderConfig config_;
    Matrix answer_tower_;
    Matrix question_tower_;
};

}  // namespace sentqa
