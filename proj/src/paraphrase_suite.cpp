#include "sentqa/paraphrase_suite.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <string>
#include <string_view>
#include <tuple>

#include "sentqa/error.hpp"
#include "sentqa/random.hpp"

namespace sentqa {

namespace {

struct Synonym {
    std::string_view answer_side;
    std::string_view question_side;
};

constexpr std::array<std::string_view, 40> kEntities = {
    "bert",      "roberta",    "xlnet",     "electra",     "albert",     "deberta",    "bart",
    "elmo",      "lstm",       "gru",       "cnn",         "crf",        "svm",        "word2vec",
    "glove",     "fasttext",   "seq2seq",   "transformer", "tagger",     "parser",     "retriever",
    "reader",    "ranker",     "encoder",   "decoder",     "classifier", "summarizer", "translator",
    "chatbot",   "tokenizer",  "lemmatizer", "segmenter",  "aligner",    "generator",  "discriminator",
    "critic",    "planner",    "verifier",  "reranker",    "labeler",
};

constexpr std::array<Synonym, 12> kActions = {{
    {"improves", "boosts"},     {"reduces", "lowers"},        {"predicts", "forecasts"},
    {"generates", "produces"},  {"classifies", "categorizes"}, {"encodes", "embeds"},
    {"translates", "converts"}, {"summarizes", "condenses"},  {"detects", "spots"},
    {"ranks", "orders"},        {"extracts", "retrieves"},    {"aligns", "matches"},
}};

constexpr std::array<Synonym, 12> kTargets = {{
    {"accuracy", "correctness"}, {"latency", "delay"},        {"sentiment", "emotion"},
    {"entities", "names"},       {"questions", "queries"},    {"documents", "articles"},
    {"errors", "mistakes"},      {"labels", "tags"},          {"relations", "links"},
    {"summaries", "abstracts"},  {"dialogues", "conversations"}, {"sentences", "utterances"},
}};

constexpr std::array<Synonym, 12> kMethods = {{
    {"attention", "focus"},          {"pretraining", "warmup"},     {"distillation", "compression"},
    {"augmentation", "expansion"},   {"regularization", "penalty"}, {"ensembling", "combining"},
    {"pruning", "trimming"},         {"clustering", "grouping"},    {"sampling", "drawing"},
    {"adaptation", "adjustment"},    {"curriculum", "schedule"},    {"contrastive", "comparative"},
}};

constexpr std::array<Synonym, 10> kSources = {{
    {"wikipedia", "encyclopedia"}, {"tweets", "microblogs"},   {"news", "headlines"},
    {"reviews", "ratings"},        {"papers", "publications"}, {"transcripts", "recordings"},
    {"forums", "threads"},         {"textbooks", "manuals"},   {"emails", "messages"},
    {"patents", "filings"},
}};

struct Fact {
    std::size_t entity, action, target, method, source;
    auto key() const { return std::tie(entity, action, target, method, source); }
    bool operator<(const Fact& o) const { return key() < o.key(); }
};

class Generator {
  public:
    Generator(const ParaphraseSuiteConfig& cfg) : cfg_(cfg), rng_(rnd::derive(cfg.seed, 11)) {}

    Fact fresh_fact() {
        for (;;) {
            Fact f{pick(kEntities.size()), pick(kActions.size()), pick(kTargets.size()),
                   pick(kMethods.size()), pick(kSources.size())};
            if (used_.insert(f).second) return f;
        }
    }

    std::string answer(const Fact& f) {
        const std::string e(kEntities[f.entity]);
        const std::string a(kActions[f.action].answer_side);
        const std::string t(kTargets[f.target].answer_side);
        const std::string m(kMethods[f.method].answer_side);
        const std::string s(kSources[f.source].answer_side);
        if (pick(2) == 0) return "The " + e + " " + a + " " + t + " through " + m + " on " + s + ".";
        return "Using " + m + " on " + s + ", the " + e + " " + a + " " + t + ".";
    }

    std::string question(const Fact& f) {
        const std::string e(kEntities[f.entity]);
        const std::string a(slot(kActions[f.action]));
        const std::string t(slot(kTargets[f.target]));
        const std::string m(slot(kMethods[f.method]));
        const std::string s(slot(kSources[f.source]));
        if (pick(2) == 0) return "how does " + e + " " + a + " " + t + " via " + m + " over " + s + "?";
        return "which " + e + " setup " + a + " " + t + " with " + m + " from " + s + "?";
    }

    std::size_t pick(std::size_t n) { return static_cast<std::size_t>(rnd::bounded(rng_, n)); }
    rnd::Engine& rng() { return rng_; }

  private:
    std::string_view slot(const Synonym& s) {
        return rnd::uniform01(rng_) < cfg_.overlap_probability ? s.answer_side : s.question_side;
    }

    const ParaphraseSuiteConfig& cfg_;
    rnd::Engine rng_;
    std::set<Fact> used_;
};

}  // namespace

ParaphraseSuite generate_paraphrase_suite(const ParaphraseSuiteConfig& cfg) {
    const std::size_t n_sentences = cfg.documents * cfg.sentences_per_document;
    if (cfg.documents == 0 || cfg.sentences_per_document == 0) {
        throw InvalidInputError("paraphrase suite needs at least one sentence");
    }
    if (cfg.queries > n_sentences) throw InvalidInputError("more queries than sentences");

    Generator gen(cfg);
    ParaphraseSuite suite;

    struct Placed {
        Fact fact;
        std::size_t doc;
        std::string text;
        std::size_t start;
    };
    std::vector<Placed> placed;
    nlohmann::json data = nlohmann::json::array();
    for (std::size_t d = 0; d < cfg.documents; ++d) {
        std::string body;
        for (std::size_t s = 0; s < cfg.sentences_per_document; ++s) {
            const Fact f = gen.fresh_fact();
            if (!body.empty()) body.push_back(' ');
            Placed p{f, d, gen.answer(f), body.size()};
            body += p.text;
            placed.push_back(std::move(p));
        }
        Document doc;
        doc.doc_id = "a" + std::to_string(d) + "p0";
        doc.title = "Synthetic paper " + std::to_string(d);
        doc.body = body;
        doc.meta["source"] = "paraphrase-suite";
        suite.documents.push_back(doc);
        data.push_back({{"title", doc.title},
                        {"paragraphs", nlohmann::json::array({{{"context", body},
                                                               {"qas", nlohmann::json::array()}}})}});
    }

    // Query a random subset of sentences, one question each.
    std::vector<std::size_t> order(placed.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rnd::shuffle(gen.rng(), std::span(order));
    order.resize(cfg.queries);
    std::sort(order.begin(), order.end());
    for (const auto i : order) {
        const auto& p = placed[i];
        auto& qas = data[p.doc]["paragraphs"][0]["qas"];
        qas.push_back({{"id", "q" + std::to_string(i)},
                       {"question", gen.question(p.fact)},
                       {"answers", nlohmann::json::array({{{"text", p.text}, {"answer_start", p.start}}})}});
    }
    suite.dataset = {{"version", "paraphrase-suite-1"}, {"data", std::move(data)}};

    // Training pairs come from fresh facts grouped into small documents for context.
    const std::size_t per_doc = cfg.sentences_per_document;
    while (suite.training.size() < cfg.training_pairs) {
        std::vector<std::pair<Fact, std::string>> doc;
        for (std::size_t s = 0; s < per_doc; ++s) {
            const Fact f = gen.fresh_fact();
            doc.emplace_back(f, gen.answer(f));
        }
        for (std::size_t s = 0; s < doc.size() && suite.training.size() < cfg.training_pairs; ++s) {
            std::string context;
            for (std::size_t o = (s >= 2 ? s - 2 : 0); o < std::min(doc.size(), s + 3); ++o) {
                if (o == s) continue;
                if (!context.empty()) context.push_back(' ');
                context += doc[o].second;
            }
            suite.training.push_back({gen.question(doc[s].first), doc[s].second, context});
        }
    }
    return suite;
}

}  // namespace sentqa
