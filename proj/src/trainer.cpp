#include "sentqa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include <json.hpp>

#include "sentqa/error.hpp"
#include "sentqa/random.hpp"

namespace sentqa {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Encoded {
    SparseVector answer_features;
    SparseVector question_features;
    std::vector<double> u;  // answer projection
    std::vector<double> v;  // question projection
    double u_norm = 0.0;
    double v_norm = 0.0;
};

Encoded forward(const TrainingPair& pair, const EncoderModel& model) {
    Encoded e;
    e.answer_features = model.answer_features(pair.answer, pair.context);
    e.question_features = model.featurize(pair.question);
    e.u = model.project_answer(e.answer_features);
    e.v = model.project_question(e.question_features);
    e.u_norm = std::sqrt(dot(e.u, e.u));
    e.v_norm = std::sqrt(dot(e.v, e.v));
    return e;
}

double pair_loss(PairLabel label, double temperature, double cosine) {
    const double z = temperature * cosine;
    // -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
    return label == PairLabel::positive ? softplus(-z) : softplus(z);
}

void accumulate(TowerGradient& grad, const SparseVector& x, std::span<const double> direction) {
    for (std::size_t i = 0; i < x.indices.size(); ++i) {
        auto& row = grad.rows[x.indices[i]];
        if (row.empty()) row.assign(direction.size(), 0.0);
        for (std::size_t d = 0; d < direction.size(); ++d) row[d] += x.values[i] * direction[d];
    }
}

void apply(Matrix& tower, const TowerGradient& grad, double lr) {
    for (const auto& [r, g] : grad.rows) {
        auto row = tower.row(r);
        for (std::size_t d = 0; d < g.size(); ++d) row[d] -= lr * g[d];
    }
}

bool has_features(const QaTriple& p, const EncoderModel& model) {
    return !model.featurize(p.question).empty() && !model.answer_features(p.answer, p.context).empty();
}

// Appends `count` negatives for `pos`, answers drawn uniformly (with
// replacement) from `pool` entries whose answer differs from the positive's.
void add_negatives(const QaTriple& pos, std::span<const QaTriple* const> pool, std::size_t count,
                   rnd::Engine& rng, std::vector<TrainingPair>& out) {
    std::vector<const QaTriple*> candidates;
    for (const auto* p : pool) {
        if (p->answer != pos.answer) candidates.push_back(p);
    }
    if (candidates.empty()) return;
    for (std::size_t k = 0; k < count; ++k) {
        const auto* neg = candidates[rnd::bounded(rng, candidates.size())];
        out.push_back({pos.question, neg->answer, neg->context, PairLabel::negative});
    }
}

double mean_loss(std::span<const TrainingPair> set, const EncoderModel& model) {
    return set.empty() ? 0.0 : loss(set, model) / static_cast<double>(set.size());
}

}  // namespace

double loss(std::span<const TrainingPair> batch, const EncoderModel& model) {
    if (batch.empty()) throw InvalidInputError("loss of an empty batch");
    const double temperature = model.config().temperature;
    double total = 0.0;
    for (const auto& pair : batch) {
        const auto e = forward(pair, model);
        if (e.u_norm == 0.0 || e.v_norm == 0.0) continue;
        total += pair_loss(pair.label, temperature, dot(e.u, e.v) / (e.u_norm * e.v_norm));
    }
    return total;
}

LossGradient loss_and_gradient(std::span<const TrainingPair> batch, const EncoderModel& model) {
    if (batch.empty()) throw InvalidInputError("loss of an empty batch");
    const double temperature = model.config().temperature;
    const std::size_t dim = model.dim();
    LossGradient out;
    std::vector<double> du(dim);
    std::vector<double> dv(dim);
    for (const auto& pair : batch) {
        const auto e = forward(pair, model);
        if (e.u_norm == 0.0 || e.v_norm == 0.0) {
            ++out.skipped;
            continue;
        }
        const double uv = e.u_norm * e.v_norm;
        const double c = dot(e.u, e.v) / uv;
        out.loss += pair_loss(pair.label, temperature, c);

        // dL/dcos for each label
        const double s = sigmoid(temperature * c);
        const double g = pair.label == PairLabel::positive ? -temperature * (1.0 - s) : temperature * s;
        const double uu = e.u_norm * e.u_norm;
        const double vv = e.v_norm * e.v_norm;
        for (std::size_t d = 0; d < dim; ++d) {
            du[d] = g * (e.v[d] / uv - c * e.u[d] / uu);
            dv[d] = g * (e.u[d] / uv - c * e.v[d] / vv);
        }
        accumulate(out.answer_tower, e.answer_features, du);
        accumulate(out.question_tower, e.question_features, dv);
    }
    return out;
}

void TrainerConfig::validate() const {
    encoder.validate();
    if (batch_size == 0) throw InvalidInputError("batch size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidInputError("learning rate must be a finite non-negative number");
    }
}

TrainResult train(std::span<const QaTriple> pairs, const TrainerConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    return train(pairs, EncoderModel::initialize(config.encoder), config, on_epoch);
}

TrainResult train(std::span<const QaTriple> pairs, EncoderModel model, const TrainerConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    std::set<std::string_view> distinct;
    for (const auto& p : pairs) {
        if (p.question.empty() || p.answer.empty()) {
            throw InvalidInputError("training pairs need a non-empty question and answer");
        }
        distinct.insert(p.answer);
    }
    if (distinct.size() < 2) {
        throw InvalidInputError("training needs at least 2 distinct answers, got " +
                                std::to_string(distinct.size()));
    }

    TrainReport report;
    std::vector<const QaTriple*> usable;
    for (const auto& p : pairs) {
        if (has_features(p, model)) {
            usable.push_back(&p);
        } else {
            ++report.skipped_pairs;
        }
    }
    if (usable.empty()) throw InvalidInputError("no training pair has any features");

    // Fixed probe set: every positive with negatives drawn once from the whole set.
    std::vector<TrainingPair> probe;
    {
        auto rng = rnd::derive(config.seed, 1);
        for (const auto* p : usable) {
            probe.push_back({p->question, p->answer, p->context, PairLabel::positive});
            add_negatives(*p, usable, config.negatives, rng, probe);
        }
    }
    report.initial_loss = mean_loss(probe, model);

    auto rng = rnd::derive(config.seed, 2);
    std::vector<const QaTriple*> order = usable;
    std::vector<TrainingPair> batch;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rnd::shuffle(rng, std::span(order));
        double epoch_loss = 0.0;
        std::size_t epoch_pairs = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            const std::span<const QaTriple* const> members(order.data() + begin, end - begin);

            batch.clear();
            for (const auto* p : members) {
                batch.push_back({p->question, p->answer, p->context, PairLabel::positive});
                const bool batch_has_other = std::any_of(
                    members.begin(), members.end(), [&](const QaTriple* o) { return o->answer != p->answer; });
                add_negatives(*p, batch_has_other ? members : std::span<const QaTriple* const>(usable),
                              config.negatives, rng, batch);
            }

            const auto lg = loss_and_gradient(batch, model);
            epoch_loss += lg.loss;
            epoch_pairs += batch.size() - lg.skipped;
            // Step on the batch mean; the summed loss overshoots badly at small init scales.
            const std::size_t used = batch.size() - lg.skipped;
            if (config.learning_rate > 0.0 && used > 0) {
                const double step = config.learning_rate / static_cast<double>(used);
                apply(model.answer_tower(), lg.answer_tower, step);
                apply(model.question_tower(), lg.question_tower, step);
            }
        }
        const double mean = epoch_pairs == 0 ? 0.0 : epoch_loss / static_cast<double>(epoch_pairs);
        report.epoch_losses.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }

    report.final_loss = mean_loss(probe, model);
    report.converged = report.final_loss < report.initial_loss;
    return {std::move(model), std::move(report)};
}

std::vector<QaTriple> read_training_pairs(std::istream& in) {
    std::vector<QaTriple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
        QaTriple t;
        for (const auto& [key, dest, required] :
             {std::tuple{"question", &t.question, true}, std::tuple{"answer", &t.answer, true},
              std::tuple{"context", &t.context, false}}) {
            const auto it = j.find(key);
            if (it == j.end()) {
                if (required) throw ParseError(line_no, std::string("missing field '") + key + "'");
                continue;
            }
            if (!it->is_string()) throw ParseError(line_no, std::string("field '") + key + "' must be a string");
            *dest = it->get<std::string>();
        }
        if (t.question.empty() || t.answer.empty()) {
            throw ParseError(line_no, "question and answer must be non-empty");
        }
        out.push_back(std::move(t));
    }
    return out;
}

void write_training_pairs(std::ostream& out, std::span<const QaTriple> pairs) {
    for (const auto& p : pairs) {
        nlohmann::ordered_json j;
        j["question"] = p.question;
        j["answer"] = p.answer;
        j["context"] = p.context;
        out << j.dump() << '\n';
    }
}

std::vector<QaTriple> load_training_pairs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return read_training_pairs(in);
}

void save_training_pairs(std::span<const QaTriple> pairs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    write_training_pairs(out, pairs);
    if (!out.flush()) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace sentqa
