#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "sentqa/error.hpp"
#include "sentqa/paraphrase_suite.hpp"
#include "sentqa/trainer.hpp"
#include "test_support.hpp"

using namespace sentqa;
using sentqa::testing::small_model;

namespace {

double norm(std::span<const double> v) {
    double s = 0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<QaTriple> toy_pairs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<QaTriple> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({sentqa::testing::random_sentence(rng, 2, 5), sentqa::testing::random_sentence(rng, 3, 8),
                       sentqa::testing::random_sentence(rng, 0, 6)});
    }
    return out;
}

}  // namespace

TEST(Featurize, EmptyTextIsZero) { EXPECT_TRUE(small_model().featurize("").empty()); }

TEST(Featurize, SingleTokenIsOneHot) {
    const auto m = small_model(3, 16, 1u << 16);
    const auto x = m.featurize("transformer");
    ASSERT_EQ(x.indices.size(), 1u);
    EXPECT_EQ(x.indices[0], feature_hash("transformer", 3) % (1u << 16));
    EXPECT_DOUBLE_EQ(x.values[0], 1.0);
}

TEST(Featurize, UnigramBagIsOrderInvariant) {
    const auto m = small_model();
    EXPECT_EQ(m.featurize("alpha beta gamma", 1), m.featurize("gamma alpha beta", 1));
    EXPECT_NE(m.featurize("alpha beta gamma", 2), m.featurize("gamma alpha beta", 2));
}

TEST(Featurize, NormalizedSortedAndCounted) {
    const auto m = small_model(1, 8, 1u << 20);
    const auto x = m.featurize("cat cat dog");
    EXPECT_NEAR(x.norm(), 1.0, 1e-12);
    for (std::size_t i = 1; i < x.indices.size(); ++i) EXPECT_LT(x.indices[i - 1], x.indices[i]);
    // cat x2, dog, cat_cat, cat_dog: counts (2,1,1,1) over norm sqrt(7)
    double max_value = 0;
    for (const double v : x.values) max_value = std::max(max_value, v);
    EXPECT_NEAR(max_value, 2.0 / std::sqrt(7.0), 1e-12);
}

TEST(FeatureHash, DependsOnSeed) {
    EXPECT_EQ(feature_hash("x", 1), feature_hash("x", 1));
    EXPECT_NE(feature_hash("x", 1), feature_hash("x", 2));
    EXPECT_NE(feature_hash("x", 1), feature_hash("y", 1));
}

TEST(Encoder, OutputsAreUnitNorm) {
    const auto m = small_model();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto a = m.encode_answer(sentqa::testing::random_sentence(rng, 1, 8),
                                       sentqa::testing::random_sentence(rng, 0, 8));
        const auto q = m.encode_question(sentqa::testing::random_sentence(rng, 1, 8));
        EXPECT_NEAR(norm(a.values()), 1.0, 1e-6);
        EXPECT_NEAR(norm(q.values()), 1.0, 1e-6);
        const double r = relevance(a, q);
        EXPECT_GE(r, -1.0 - 1e-12);
        EXPECT_LE(r, 1.0 + 1e-12);
    }
}

TEST(Encoder, ZeroContextWeightIgnoresContext) {
    EncoderConfig cfg;
    cfg.dim = 8;
    cfg.buckets = 256;
    cfg.context_weight = 0.0;
    const auto m = EncoderModel::initialize(cfg);
    EXPECT_EQ(m.encode_answer("neural ranking", "first context"), m.encode_answer("neural ranking", "other text"));
    const auto with_ctx = small_model();
    EXPECT_NE(with_ctx.encode_answer("neural ranking", "first context"),
              with_ctx.encode_answer("neural ranking", "other text"));
}

TEST(Encoder, Deterministic) {
    const auto m = small_model();
    EXPECT_EQ(m.encode_answer("a frame", "ctx"), m.encode_answer("a frame", "ctx"));
    EXPECT_EQ(m.encode_question("what is lstm"), m.encode_question("what is lstm"));
    EXPECT_EQ(small_model(7), small_model(7));
    EXPECT_NE(small_model(7), small_model(8));
}

TEST(Encoder, DisjointQuestionsAreNotIdentical) {
    const auto m = small_model(42, 128, 1u << 18);
    EXPECT_LT(relevance(m.encode_question("graph neural layer"), m.encode_question("river stone cloud")), 1.0);
}

TEST(Encoder, StopwordOnlyTextIsUnencodable) {
    const auto m = small_model();
    try {
        m.encode_answer("the of and", "");
        FAIL();
    } catch (const UnencodableError& e) {
        EXPECT_STREQ(e.what(), "unencodable frame");
    }
    EXPECT_NO_THROW(m.encode_answer("the of and", "context rescues it"));
    EXPECT_THROW(m.encode_question("is it"), UnencodableError);
}

TEST(Encoder, InitScale) {
    const auto m = small_model(5, 16, 1024);
    const double bound = 1.0 / std::sqrt(1024.0);
    for (const double w : m.answer_tower().data()) EXPECT_LE(std::abs(w), bound);
    for (const double w : m.question_tower().data()) EXPECT_LE(std::abs(w), bound);
}

TEST(EncoderConfig, Validation) {
    const auto bad = [](auto mutate) {
        EncoderConfig c;
        mutate(c);
        return c;
    };
    EXPECT_THROW(bad([](auto& c) { c.dim = 1; }).validate(), InvalidInputError);
    EXPECT_THROW(bad([](auto& c) { c.buckets = 4; c.dim = 8; }).validate(), InvalidInputError);
    EXPECT_THROW(bad([](auto& c) { c.context_weight = 1.5; }).validate(), InvalidInputError);
    EXPECT_THROW(bad([](auto& c) { c.temperature = 0; }).validate(), InvalidInputError);
    EXPECT_NO_THROW(EncoderConfig{}.validate());
}

TEST(Relevance, Basics) {
    const auto v = EmbeddingVector::normalize({3, 4});
    const auto w = EmbeddingVector::normalize({-4, 3});
    const auto neg = EmbeddingVector::normalize({-3, -4});
    EXPECT_NEAR(relevance(v, v), 1.0, 1e-15);
    EXPECT_NEAR(relevance(v, w), 0.0, 1e-15);
    EXPECT_NEAR(relevance(v, neg), -1.0, 1e-15);
    EXPECT_THROW(EmbeddingVector::normalize({0, 0}), UnencodableError);
    EXPECT_THROW(EmbeddingVector::normalize({NAN, 1}), UnencodableError);
}

TEST(Loss, PerfectPairsExample) {
    // answer and question towers identical: cos(q, a) = 1 for the positive;
    // negative uses a flipped question tower row so cos = -1.
    EncoderConfig cfg;
    cfg.dim = 2;
    cfg.buckets = 2;
    cfg.seed = 0;
    Matrix a(2, 2), q(2, 2);
    a.at(0, 0) = a.at(1, 0) = 1.0;
    q.at(0, 0) = q.at(1, 0) = 1.0;
    const EncoderModel m(cfg, a, q);
    Matrix qneg(2, 2);
    qneg.at(0, 0) = qneg.at(1, 0) = -1.0;
    const EncoderModel flipped(cfg, a, qneg);

    const std::vector<TrainingPair> pos{{"question", "answer", "", PairLabel::positive}};
    const std::vector<TrainingPair> neg{{"question", "answer", "", PairLabel::negative}};
    const double total = loss(pos, m) + loss(neg, flipped);
    EXPECT_NEAR(total, 9.079779843364126e-05, 1e-15);
    EXPECT_NEAR(total, -std::log(sigmoid(10)) - std::log(1 - sigmoid(-10)), 1e-15);
}

TEST(Loss, OrthogonalPositiveIsLn2) {
    EncoderConfig cfg;
    cfg.dim = 2;
    cfg.buckets = 2;
    Matrix a(2, 2), q(2, 2);
    a.at(0, 0) = a.at(1, 0) = 1.0;
    q.at(0, 1) = q.at(1, 1) = 1.0;
    const EncoderModel m(cfg, a, q);
    const std::vector<TrainingPair> pos{{"question", "answer", "", PairLabel::positive}};
    EXPECT_NEAR(loss(pos, m), std::log(2.0), 1e-15);
}

TEST(Loss, DuplicatedBatchDoubles) {
    const auto m = small_model();
    std::vector<TrainingPair> batch;
    for (const auto& p : toy_pairs(6, 1)) batch.push_back({p.question, p.answer, p.context, PairLabel::positive});
    batch[2].label = batch[4].label = PairLabel::negative;
    auto doubled = batch;
    doubled.insert(doubled.end(), batch.begin(), batch.end());
    const double l = loss(batch, m);
    EXPECT_GT(l, 0.0);
    EXPECT_NEAR(loss(doubled, m), 2 * l, 1e-12 * l);
    EXPECT_THROW(loss({}, m), InvalidInputError);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(77);
    int configs = 0;
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t dim = 2 + rng() % 7;          // 2..8
        const std::size_t buckets = dim + rng() % (65 - dim);  // dim..64
        const auto m = small_model(rng(), dim, buckets);
        std::vector<TrainingPair> batch;
        const std::size_t n = 1 + rng() % 6;
        for (const auto& p : toy_pairs(n, rng())) {
            batch.push_back({p.question, p.answer, p.context, rng() % 2 ? PairLabel::positive : PairLabel::negative});
        }
        const auto lg = loss_and_gradient(batch, m);
        EXPECT_NEAR(lg.loss, loss(batch, m), 1e-12);
        const double h = 1e-5;
        double worst = 0;
        for (int tower = 0; tower < 2; ++tower) {
            const auto& grad = tower == 0 ? lg.answer_tower : lg.question_tower;
            for (std::size_t r = 0; r < buckets; ++r) {
                for (std::size_t c = 0; c < dim; ++c) {
                    auto plus = m;
                    auto minus = m;
                    (tower == 0 ? plus.answer_tower() : plus.question_tower()).at(r, c) += h;
                    (tower == 0 ? minus.answer_tower() : minus.question_tower()).at(r, c) -= h;
                    const double fd = (loss(batch, plus) - loss(batch, minus)) / (2 * h);
                    const double an = grad.at(static_cast<std::uint32_t>(r), c);
                    const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
                    worst = std::max(worst, std::abs(fd - an) / scale);
                }
            }
        }
        EXPECT_LT(worst, 1e-4) << "trial " << trial;
        ++configs;
    }
    EXPECT_GE(configs, 20);
}

TEST(Train, LossDecreasesOnParaphrasePairs) {
    ParaphraseSuiteConfig sc;
    sc.documents = 4;
    sc.queries = 5;
    sc.training_pairs = 200;
    const auto suite = generate_paraphrase_suite(sc);
    TrainerConfig cfg;
    cfg.encoder.buckets = 1u << 14;
    cfg.encoder.dim = 32;
    cfg.epochs = 30;
    std::vector<double> seen;
    const auto result = train(suite.training, cfg, [&](std::size_t, double l) { seen.push_back(l); });
    ASSERT_EQ(result.report.epoch_losses.size(), 30u);
    EXPECT_EQ(seen, result.report.epoch_losses);
    EXPECT_LT(result.report.epoch_losses.back(), result.report.epoch_losses.front());
    EXPECT_LT(result.report.final_loss, result.report.initial_loss);
    EXPECT_TRUE(result.report.converged);
}

TEST(Train, ZeroLearningRateKeepsWeights) {
    TrainerConfig cfg;
    cfg.encoder.buckets = 256;
    cfg.encoder.dim = 8;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    const auto result = train(toy_pairs(40, 3), cfg);
    EXPECT_EQ(result.model, EncoderModel::initialize(cfg.encoder));
}

TEST(Train, FixedSeedIsBitIdentical) {
    TrainerConfig cfg;
    cfg.encoder.buckets = 512;
    cfg.encoder.dim = 8;
    cfg.epochs = 3;
    const auto pairs = toy_pairs(60, 4);
    const auto a = train(pairs, cfg);
    const auto b = train(pairs, cfg);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.report.epoch_losses, b.report.epoch_losses);
    cfg.seed = 43;
    EXPECT_NE(train(pairs, cfg).model, a.model);
}

TEST(Train, NeedsTwoDistinctAnswers) {
    TrainerConfig cfg;
    cfg.encoder.buckets = 64;
    cfg.encoder.dim = 4;
    const std::vector<QaTriple> same{{"q one", "same answer", ""}, {"q two", "same answer", ""}};
    EXPECT_THROW(train(same, cfg), InvalidInputError);
    EXPECT_THROW(train({}, cfg), InvalidInputError);
}

TEST(Train, SkipsFeaturelessPairs) {
    TrainerConfig cfg;
    cfg.encoder.buckets = 64;
    cfg.encoder.dim = 4;
    cfg.epochs = 1;
    auto pairs = toy_pairs(10, 9);
    pairs.push_back({"the of", "an answer here", ""});
    EXPECT_EQ(train(pairs, cfg).report.skipped_pairs, 1u);
}

TEST(ModelFile, RoundTripAndCorruption) {
    auto m = small_model(9, 8, 128);
    m.answer_tower().at(3, 2) = -0.125;
    std::stringstream buf;
    m.save(buf);
    EXPECT_EQ(EncoderModel::load(buf), m);

    const std::string bytes = buf.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 9));
    EXPECT_THROW(EncoderModel::load(truncated), Error);
    std::string wrong_magic = bytes;
    wrong_magic[0] = 'X';
    std::stringstream bad(wrong_magic);
    EXPECT_THROW(EncoderModel::load(bad), Error);

    sentqa::testing::TempDir dir;
    m.save(dir / "m.bin");
    EXPECT_EQ(EncoderModel::load(dir / "m.bin"), m);
    EXPECT_THROW(EncoderModel::load(dir / "missing.bin"), Error);
}

TEST(TrainingPairFile, RoundTripAndErrors) {
    const auto pairs = toy_pairs(20, 5);
    sentqa::testing::TempDir dir;
    save_training_pairs(pairs, dir / "p.jsonl");
    EXPECT_EQ(load_training_pairs(dir / "p.jsonl"), pairs);

    std::istringstream no_context("{\"question\":\"q\",\"answer\":\"a\"}\n");
    EXPECT_EQ(read_training_pairs(no_context).at(0).context, "");
    std::istringstream missing("{\"question\":\"q\"}\n");
    EXPECT_THROW(read_training_pairs(missing), ParseError);
    std::istringstream empty_q("{\"question\":\"\",\"answer\":\"a\"}\n");
    EXPECT_THROW(read_training_pairs(empty_q), ParseError);
}
