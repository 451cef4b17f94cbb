#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sentqa/embedding.hpp"

namespace sentqa {

enum class PairLabel { positive, negative };

struct TrainingPair {
    std::string question;
    std::string answer;
    std::string context;
    PairLabel label = PairLabel::positive;
};

/// One ground-truth record of a training-pair file.
struct QaTriple {
    std::string question;
    std::string answer;
    std::string context;

    bool operator==(const QaTriple&) const = default;
};

/// Gradient of one tower, stored only for the rows the batch touched.
struct TowerGradient {
    std::unordered_map<std::uint32_t, std::vector<double>> rows;

    double at(std::uint32_t row, std::size_t col) const {
        const auto it = rows.find(row);
        return it == rows.end() ? 0.0 : it->second[col];
    }
};

struct LossGradient {
    double loss = 0.0;
    std::size_t skipped = 0;  // pairs with a zero projection on either side
    TowerGradient answer_tower;
    TowerGradient question_tower;
};

/// Cross-entropy over cosine scores mapped through a sigmoid:
///   L = -sum_pos log sigmoid(tau * cos) - sum_neg log(1 - sigmoid(tau * cos)).
/// Pairs whose question or answer projects to zero are left out.
/// Throws InvalidInputError on an empty batch.
double loss(std::span<const TrainingPair> batch, const EncoderModel& model);

/// Same loss plus its analytic gradient with respect to both towers.
LossGradient loss_and_gradient(std::span<const TrainingPair> batch, const EncoderModel& model);

struct TrainerConfig {
    EncoderConfig encoder;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::size_t negatives = 4;  // per positive, drawn from the other answers in its batch
    double learning_rate = 0.05;
    std::uint64_t seed = 42;

    void validate() const;
};

struct TrainReport {
    double initial_loss = 0.0;  // mean per pair on the fixed probe set, before training
    double final_loss = 0.0;    // same probe set, after training
    std::vector<double> epoch_losses;  // mean per pair seen during each epoch
    std::size_t skipped_pairs = 0;
    bool converged = false;  // final_loss < initial_loss
};

struct TrainResult {
    EncoderModel model;
    TrainReport report;
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Mini-batch gradient descent from a freshly initialized model. Fully
/// deterministic for a given config. Throws InvalidInputError with fewer than
/// two distinct answers.
TrainResult train(std::span<const QaTriple> pairs, const TrainerConfig& config,
                  const EpochCallback& on_epoch = {});
TrainResult train(std::span<const QaTriple> pairs, EncoderModel initial, const TrainerConfig& config,
                  const EpochCallback& on_epoch = {});

// Training-pair JSONL: {question, answer, context}.
std::vector<QaTriple> read_training_pairs(std::istream& in);
void write_training_pairs(std::ostream& out, std::span<const QaTriple> pairs);
std::vector<QaTriple> load_training_pairs(const std::filesystem::path& path);
void save_training_pairs(std::span<const QaTriple> pairs, const std::filesystem::path& path);

}  // namespace sentqa
