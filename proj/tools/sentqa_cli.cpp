// sentqa: ingest, train, index, query, eval and serve from one binary.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "sentqa/annotation_store.hpp"
#include "sentqa/corpus.hpp"
#include "sentqa/error.hpp"
#include "sentqa/eval.hpp"
#include "sentqa/paraphrase_suite.hpp"
#include "sentqa/query_engine.hpp"
#include "sentqa/service.hpp"
#include "sentqa/trainer.hpp"

namespace fs = std::filesystem;
using namespace sentqa;

namespace {

constexpr const char* kLexicalFile = "lexical.idx";
constexpr const char* kVectorFile = "vectors.idx";

struct UsageError : Error {
    using Error::Error;
};

std::string format_score(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

// Environment fallback for a flag left unset.
void from_env(std::string& value, const char* name) {
    if (!value.empty()) return;
    if (const char* v = std::getenv(name)) value = v;
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return in;
}

std::shared_ptr<const EncoderModel> load_model(const std::string& path) {
    if (path.empty()) throw UsageError("a model is required (--model)");
    return std::make_shared<const EncoderModel>(EncoderModel::load(fs::path(path)));
}

SearchIndex load_search_index(const std::string& corpus, const std::string& model_path,
                              const std::string& index_dir) {
    auto frames = load_corpus(corpus);
    auto model = load_model(model_path);
    if (index_dir.empty()) return SearchIndex::build(std::move(frames), std::move(model));
    auto lex_in = open_in(fs::path(index_dir) / kLexicalFile);
    auto lexical = InvertedIndex::load(lex_in);
    auto vec_in = open_in(fs::path(index_dir) / kVectorFile);
    auto vectors = VectorIndex::load(vec_in);
    return SearchIndex(std::move(frames), std::move(lexical), std::move(vectors), std::move(model));
}

// ---- ingest ----------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string out;
    std::size_t window = kDefaultContextWindow;
};

void run_ingest(const IngestArgs& a) {
    const auto docs = load_documents(a.input);
    if (docs.empty()) throw InvalidInputError("no documents in '" + a.input + "'");
    std::vector<Frame> frames;
    for (const auto& d : docs) {
        auto f = build_frames(d, a.window);
        frames.insert(frames.end(), std::make_move_iterator(f.begin()), std::make_move_iterator(f.end()));
    }
    if (a.out.empty()) {
        write_corpus(std::cout, frames);
    } else {
        auto out = open_out(a.out);
        write_corpus(out, frames);
        std::cerr << "ingested " << docs.size() << " documents into " << frames.size() << " frames\n";
    }
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
    std::string input;
    std::string out;
    TrainerConfig cfg;
    std::uint64_t seed = 42;
};

void run_train(TrainArgs a) {
    const auto pairs = load_training_pairs(a.input);
    a.cfg.seed = a.seed;
    a.cfg.encoder.seed = a.seed;
    const auto result = train(pairs, a.cfg, [](std::size_t epoch, double loss) {
        std::cout << "epoch " << epoch << " loss " << format_score(loss) << '\n';
    });
    const auto& r = result.report;
    std::cout << "initial_loss " << format_score(r.initial_loss) << '\n'
              << "final_loss " << format_score(r.final_loss) << '\n'
              << "skipped_pairs " << r.skipped_pairs << '\n'
              << (r.converged ? "converged" : "did not converge") << '\n';
    result.model.save(fs::path(a.out));
}

// ---- index -----------------------------------------------------------------

struct IndexArgs {
    std::string corpus;
    std::string model;
    std::string out_dir;
};

void run_index(const IndexArgs& a) {
    auto frames = load_corpus(a.corpus);
    const auto index = SearchIndex::build(std::move(frames), load_model(a.model));
    fs::create_directories(a.out_dir);
    {
        auto out = open_out(fs::path(a.out_dir) / kLexicalFile);
        index.lexical().save(out);
        if (!out.flush()) throw Error("failed writing lexical index");
    }
    {
        auto out = open_out(fs::path(a.out_dir) / kVectorFile);
        index.vectors().save(out);
        if (!out.flush()) throw Error("failed writing vector index");
    }
    std::size_t vectors = 0;
    for (std::size_t i = 0; i < index.vectors().group_count(); ++i) vectors += index.vectors().group_size(i);
    std::cout << "frames " << index.frames().size() << '\n'
              << "terms " << index.lexical().n_terms() << '\n'
              << "vectors " << vectors << '\n'
              << "unencodable_frames " << index.vectors().skipped().size() << '\n';
}

// ---- query -----------------------------------------------------------------

struct QueryArgs {
    std::string corpus;
    std::string model;
    std::string index_dir;
    std::string question;
    std::size_t k = 10;
    double alpha = 0.3;
    std::vector<std::string> docs;
    bool exhaustive = false;
    bool json = false;
};

void run_query(const QueryArgs& a) {
    const auto index = load_search_index(a.corpus, a.model, a.index_dir);
    QueryConfig cfg;
    cfg.top_k = a.k;
    cfg.alpha = a.alpha;
    cfg.exhaustive = a.exhaustive;
    if (!a.docs.empty()) cfg.doc_filter = std::set<std::string>(a.docs.begin(), a.docs.end());
    const auto results = query(index, a.question, cfg);
    if (a.json) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& r : results) arr.push_back(to_json(r));
        std::cout << arr.dump(2) << '\n';
        return;
    }
    std::cout << "rank  final     cosine    bm25      frame\n";
    for (const auto& r : results) {
        std::cout << std::left << std::setw(6) << r.rank << std::setw(10) << format_score(r.final_score)
                  << std::setw(10) << format_score(r.cosine_score) << std::setw(10) << format_score(r.bm25_score)
                  << r.frame_id << '\n'
                  << "      " << r.answer << '\n';
    }
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string dataset;
    std::string model;
    std::vector<std::string> systems{"bm25", "hybrid"};
    std::size_t depth = 100;
    std::size_t k = 5;
    double alpha = 0.3;
    std::size_t threads = 1;
    std::string report;
};

void run_eval_cmd(const EvalArgs& a) {
    const auto dataset = load_squad_style(a.dataset);
    std::shared_ptr<const SearchIndex> index;
    // BM25 alone never touches the encoder, so it runs without --model.
    const bool lexical_only = std::all_of(a.systems.begin(), a.systems.end(),
                                          [](const std::string& s) { return s == "bm25" || s == "oracle"; });
    const auto search_index = [&] {
        if (!index) {
            auto model = lexical_only && a.model.empty()
                             ? std::make_shared<const EncoderModel>(EncoderModel::initialize({.dim = 2, .buckets = 2}))
                             : load_model(a.model);
            index = std::make_shared<const SearchIndex>(SearchIndex::build(dataset.frames, std::move(model)));
        }
        return index;
    };
    std::vector<Retriever> systems;
    for (const auto& name : a.systems) {
        if (name == "bm25") {
            systems.push_back(bm25_retriever(search_index()));
        } else if (name == "dense") {
            systems.push_back(dense_retriever(search_index()));
        } else if (name == "hybrid") {
            QueryConfig cfg;
            cfg.alpha = a.alpha;
            systems.push_back(hybrid_retriever(search_index(), cfg));
        } else if (name == "oracle") {
            systems.push_back(oracle_retriever(dataset));
        } else {
            throw UsageError("unknown system '" + name + "' (expected bm25, dense, hybrid or oracle)");
        }
    }
    EvalOptions opts;
    opts.depth = a.depth;
    opts.k_report = a.k;
    opts.threads = a.threads;
    const auto report = run_eval(dataset, systems, opts);
    std::cout << report.to_table();
    if (!a.report.empty()) {
        auto out = open_out(a.report);
        out << report.to_json().dump(2) << '\n';
    }
}

// ---- gen-suite -------------------------------------------------------------

struct SuiteArgs {
    std::string out_dir;
    ParaphraseSuiteConfig cfg;
};

void run_gen_suite(const SuiteArgs& a) {
    const auto suite = generate_paraphrase_suite(a.cfg);
    fs::create_directories(a.out_dir);
    save_documents(suite.documents, fs::path(a.out_dir) / "docs.jsonl");
    save_training_pairs(suite.training, fs::path(a.out_dir) / "train.jsonl");
    auto out = open_out(fs::path(a.out_dir) / "dataset.json");
    out << suite.dataset.dump(1) << '\n';
    std::cout << "documents " << suite.documents.size() << '\n'
              << "training_pairs " << suite.training.size() << '\n';
}

// ---- serve -----------------------------------------------------------------

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = -1;
    std::string docs;
    std::string corpus;
    std::string model;
    std::string annotations;
    double alpha = 0.3;
    std::size_t k = 10;
};

void run_serve(ServeArgs a) {
    from_env(a.docs, "SENTQA_DOCS");
    from_env(a.corpus, "SENTQA_CORPUS");
    from_env(a.model, "SENTQA_MODEL");
    from_env(a.annotations, "SENTQA_ANNOTATIONS");
    if (a.port < 0) {
        const char* p = std::getenv("SENTQA_PORT");
        try {
            a.port = p ? std::stoi(p) : 8080;
        } catch (const std::exception&) {
            throw UsageError("SENTQA_PORT must be a port number");
        }
    }
    if (a.port > 65535) throw UsageError("port out of range");
    if (a.docs.empty() || a.corpus.empty()) throw UsageError("serve needs --docs and --corpus");
    if (a.annotations.empty()) a.annotations = "annotations.jsonl";

    ServiceOptions options;
    options.query.alpha = a.alpha;
    options.query.top_k = a.k;
    auto store = std::make_shared<AnnotationStore>(fs::path(a.annotations));
    QaService service(load_documents(a.docs), load_corpus(a.corpus), load_model(a.model), store, options);

    // Handle SIGINT/SIGTERM on a dedicated thread; the log is fsync'ed per
    // write, so stopping the listener is all a clean shutdown needs.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    httplib::Server server;
    service.bind(server);
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
    });

    const int port = a.port == 0 ? server.bind_to_any_port(a.host) : (server.bind_to_port(a.host, a.port) ? a.port : -1);
    if (port < 0) {
        pthread_kill(waiter.native_handle(), SIGTERM);
        waiter.join();
        throw Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
    }
    std::cout << "listening on " << a.host << ':' << port << std::endl;
    server.listen_after_bind();
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    std::cout << "stopped" << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentence-level question answering: ingest, train, index, query, eval, serve"};
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Split documents into answer frames (corpus JSONL)");
    c_ingest->add_option("docs", ingest.input, "Documents JSONL {doc_id, title, body, meta}")->required();
    c_ingest->add_option("-o,--out", ingest.out, "Corpus JSONL to write (default: stdout)");
    c_ingest->add_option("--window", ingest.window, "Context sentences on each side")->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the dual encoder on question/answer pairs");
    c_train->add_option("pairs", tr.input, "Training JSONL {question, answer, context}")->required();
    c_train->add_option("-o,--out", tr.out, "Model file to write")->required();
    c_train->add_option("--dim", tr.cfg.encoder.dim, "Embedding size")->capture_default_str();
    c_train->add_option("--buckets", tr.cfg.encoder.buckets, "Feature hash buckets")->capture_default_str();
    c_train->add_option("--context-weight", tr.cfg.encoder.context_weight, "Weight of context features")
        ->capture_default_str();
    c_train->add_option("--temperature", tr.cfg.encoder.temperature, "Cosine scale inside the sigmoid")
        ->capture_default_str();
    c_train->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
    c_train->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
    c_train->add_option("--negatives", tr.cfg.negatives, "Negatives per positive")->capture_default_str();
    c_train->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
    c_train->add_option("--seed", tr.seed)->capture_default_str();

    IndexArgs ix;
    auto* c_index = app.add_subcommand("index", "Build lexical and vector index snapshots");
    c_index->add_option("--corpus", ix.corpus)->required();
    c_index->add_option("--model", ix.model)->required();
    c_index->add_option("-o,--out-dir", ix.out_dir, "Directory for the snapshots")->required();

    QueryArgs qa;
    auto* c_query = app.add_subcommand("query", "Answer a question from the indexed corpus");
    c_query->add_option("question", qa.question)->required();
    c_query->add_option("--corpus", qa.corpus)->required();
    c_query->add_option("--model", qa.model)->required();
    c_query->add_option("--index", qa.index_dir, "Snapshot directory from `index` (default: build in memory)");
    c_query->add_option("-k,--k", qa.k)->capture_default_str();
    c_query->add_option("--alpha", qa.alpha, "Weight of the BM25 term")->capture_default_str();
    c_query->add_option("--doc", qa.docs, "Restrict to a document (repeatable)");
    c_query->add_flag("--exhaustive", qa.exhaustive, "Score every frame instead of the candidate pools");
    c_query->add_flag("--json", qa.json, "Print results as JSON");

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "MRR and R@k of retrieval systems on a QA dataset");
    c_eval->add_option("dataset", ev.dataset, "Reading-comprehension JSON")->required();
    c_eval->add_option("--systems", ev.systems, "bm25, dense, hybrid, oracle")->delimiter(',')->capture_default_str();
    c_eval->add_option("--model", ev.model, "Required by dense and hybrid");
    c_eval->add_option("--depth", ev.depth)->capture_default_str();
    c_eval->add_option("-k,--k", ev.k, "Recall cutoff")->capture_default_str();
    c_eval->add_option("--alpha", ev.alpha)->capture_default_str();
    c_eval->add_option("--threads", ev.threads)->capture_default_str();
    c_eval->add_option("--report", ev.report, "Write the JSON report here");

    SuiteArgs su;
    auto* c_suite = app.add_subcommand("gen-suite", "Write the synthetic paraphrase suite");
    c_suite->add_option("-o,--out-dir", su.out_dir)->required();
    c_suite->add_option("--documents", su.cfg.documents)->capture_default_str();
    c_suite->add_option("--sentences", su.cfg.sentences_per_document)->capture_default_str();
    c_suite->add_option("--queries", su.cfg.queries)->capture_default_str();
    c_suite->add_option("--training-pairs", su.cfg.training_pairs)->capture_default_str();
    c_suite->add_option("--overlap", su.cfg.overlap_probability)->capture_default_str();
    c_suite->add_option("--seed", su.cfg.seed)->capture_default_str();

    ServeArgs sv;
    auto* c_serve = app.add_subcommand("serve", "Run the HTTP API");
    c_serve->add_option("--host", sv.host)->capture_default_str();
    c_serve->add_option("--port", sv.port, "Port, 0 for any (env SENTQA_PORT, default 8080)");
    c_serve->add_option("--docs", sv.docs, "Documents JSONL (env SENTQA_DOCS)");
    c_serve->add_option("--corpus", sv.corpus, "Corpus JSONL (env SENTQA_CORPUS)");
    c_serve->add_option("--model", sv.model, "Model file (env SENTQA_MODEL)");
    c_serve->add_option("--annotations", sv.annotations,
                        "Annotation log (env SENTQA_ANNOTATIONS, default annotations.jsonl)");
    c_serve->add_option("--alpha", sv.alpha)->capture_default_str();
    c_serve->add_option("-k,--k", sv.k, "Default top_k")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*c_ingest) run_ingest(ingest);
        if (*c_train) run_train(tr);
        if (*c_index) run_index(ix);
        if (*c_query) run_query(qa);
        if (*c_eval) run_eval_cmd(ev);
        if (*c_suite) run_gen_suite(su);
        if (*c_serve) run_serve(sv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
