#include "sentqa/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"

namespace sentqa {

double mrr(std::span<const Rank> ranks) {
    if (ranks.empty()) throw InvalidInputError("mrr of an empty rank list");
    double sum = 0.0;
    for (const auto& r : ranks) {
        if (r) sum += 1.0 / static_cast<double>(*r);
    }
    return sum / static_cast<double>(ranks.size());
}

double recall_at(std::span<const Rank> ranks, std::size_t k) {
    if (ranks.empty()) throw InvalidInputError("recall of an empty rank list");
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [&](const Rank& r) { return r && *r <= k; });
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

void EvalDataset::validate() const {
    std::unordered_set<std::string_view> ids;
    for (const auto& f : frames) ids.insert(f.frame_id);
    for (const auto& q : queries) {
        if (q.gold.empty()) throw InvalidInputError("query '" + q.id + "' has no gold frame");
        for (const auto& g : q.gold) {
            if (!ids.contains(g)) throw InvalidInputError("query '" + q.id + "' has unknown gold '" + g + "'");
        }
    }
}

namespace {

std::string id_string(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return v.dump();
    throw ParseError(0, "qa id must be a string or integer");
}

const nlohmann::json& array_field(const nlohmann::json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array()) {
        throw ParseError(0, where + ": missing array '" + key + "'");
    }
    return *it;
}

}  // namespace

EvalDataset parse_squad_style(const nlohmann::json& root, std::size_t window) {
    if (!root.is_object()) throw ParseError(0, "dataset root must be an object");
    EvalDataset ds;
    std::unordered_set<std::string> query_ids;
    std::size_t auto_id = 0;

    const auto& articles = array_field(root, "data", "dataset");
    for (std::size_t a = 0; a < articles.size(); ++a) {
        const auto& article = articles[a];
        const std::string where = "data[" + std::to_string(a) + "]";
        if (!article.is_object()) throw ParseError(0, where + " must be an object");
        const std::string title = article.value("title", std::string{});
        const auto& paragraphs = array_field(article, "paragraphs", where);
        for (std::size_t p = 0; p < paragraphs.size(); ++p) {
            const auto& para = paragraphs[p];
            const std::string pwhere = where + ".paragraphs[" + std::to_string(p) + "]";
            if (!para.is_object() || !para.contains("context") || !para["context"].is_string()) {
                throw ParseError(0, pwhere + ": missing string 'context'");
            }
            Document doc;
            doc.doc_id = "a" + std::to_string(a) + "p" + std::to_string(p);
            doc.title = title;
            doc.body = para["context"].get<std::string>();
            const nlohmann::json empty = nlohmann::json::array();
            const auto& qas = para.contains("qas") ? array_field(para, "qas", pwhere) : empty;
            if (doc.body.find_first_not_of(" \t\r\n") == std::string::npos) {
                ds.dropped_queries += qas.size();
                continue;
            }
            auto frames = build_frames(doc, window);

            for (const auto& qa : qas) {
                if (!qa.is_object() || !qa.contains("question") || !qa["question"].is_string()) {
                    throw ParseError(0, pwhere + ": qa without a string 'question'");
                }
                EvalQuery q;
                q.id = qa.contains("id") ? id_string(qa["id"]) : "q" + std::to_string(auto_id++);
                q.text = qa["question"].get<std::string>();
                if (!query_ids.insert(q.id).second) throw ParseError(0, "duplicate query id '" + q.id + "'");

                const auto answers = qa.contains("answers") ? qa["answers"] : empty;
                for (const auto& ans : answers) {
                    if (!ans.is_object() || !ans.contains("text") || !ans["text"].is_string() ||
                        !ans.contains("answer_start") || !ans["answer_start"].is_number_integer()) {
                        throw ParseError(0, pwhere + ": answer needs 'text' and integer 'answer_start'");
                    }
                    const auto answer_text = ans["text"].get<std::string>();
                    const auto start_cp = ans["answer_start"].get<long long>();
                    if (answer_text.empty() || start_cp < 0) continue;
                    std::size_t len_cp = 0;
                    for (std::size_t i = 0; i < answer_text.size(); ++len_cp) {
                        i += text::decode_utf8(answer_text, i).length;
                    }
                    const auto begin = text::code_point_to_byte_offset(doc.body, static_cast<std::size_t>(start_cp));
                    const auto end = text::code_point_to_byte_offset(doc.body, static_cast<std::size_t>(start_cp) + len_cp);
                    for (const auto& f : frames) {
                        if (f.char_start < end && begin < f.char_end) q.gold.insert(f.frame_id);
                    }
                }
                if (q.gold.empty() || q.text.find_first_not_of(" \t\r\n") == std::string::npos) {
                    ++ds.dropped_queries;
                    continue;
                }
                ds.queries.push_back(std::move(q));
            }
            ds.frames.insert(ds.frames.end(), std::make_move_iterator(frames.begin()),
                             std::make_move_iterator(frames.end()));
            ds.documents.push_back(std::move(doc));
        }
    }
    return ds;
}

EvalDataset load_squad_style(const std::filesystem::path& path, std::size_t window) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset '" + path.string() + "'");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(0, path.string() + ": " + e.what());
    }
    return parse_squad_style(root, window);
}

namespace {

std::vector<std::string> frame_ids(const SearchIndex& index, const std::vector<ScoredFrame>& hits) {
    std::vector<std::string> out;
    out.reserve(hits.size());
    for (const auto& h : hits) out.push_back(index.frames()[h.ordinal].frame_id);
    return out;
}

}  // namespace

Retriever bm25_retriever(std::shared_ptr<const SearchIndex> index) {
    return {"bm25", [index](const std::string& q, std::size_t depth) {
                return frame_ids(*index, index->lexical().top_m(q, depth));
            }};
}

Retriever dense_retriever(std::shared_ptr<const SearchIndex> index) {
    return {"dense", [index](const std::string& q, std::size_t depth) {
                try {
                    const auto hq = index->model().encode_question(q);
                    return frame_ids(*index, index->vectors().top_k_dense(hq, depth));
                } catch (const UnencodableError&) {
                    return std::vector<std::string>{};
                }
            }};
}

Retriever hybrid_retriever(std::shared_ptr<const SearchIndex> index, QueryConfig cfg) {
    return {"hybrid", [index, cfg](const std::string& q, std::size_t depth) mutable {
                QueryConfig c = cfg;
                c.top_k = depth;
                c.dense_candidates.reset();
                c.lexical_candidates.reset();
                std::vector<std::string> out;
                try {
                    for (auto& r : query(*index, q, c)) out.push_back(std::move(r.frame_id));
                } catch (const UnencodableError&) {
                }
                return out;
            }};
}

Retriever oracle_retriever(const EvalDataset& dataset) {
    auto gold = std::make_shared<std::map<std::string, std::set<std::string>>>();
    for (const auto& q : dataset.queries) (*gold)[q.text].insert(q.gold.begin(), q.gold.end());
    return {"oracle", [gold](const std::string& q, std::size_t depth) {
                std::vector<std::string> out;
                if (const auto it = gold->find(q); it != gold->end()) {
                    for (const auto& id : it->second) {
                        if (out.size() == depth) break;
                        out.push_back(id);
                    }
                }
                return out;
            }};
}

const SystemEval& EvalReport::system(std::string_view name) const {
    for (const auto& s : systems) {
        if (s.name == name) return s;
    }
    throw NotFoundError("no system named '" + std::string(name) + "' in report");
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["corpus"] = {{"documents", n_documents},
                   {"frames", n_frames},
                   {"queries", n_queries},
                   {"dropped_queries", dropped_queries}};
    j["depth"] = depth;
    j["k"] = k_report;
    j["systems"] = nlohmann::ordered_json::array();
    for (const auto& s : systems) {
        j["systems"].push_back({{"name", s.name}, {"mrr", s.mrr}, {"recall_at_k", s.recall}});
    }
    j["per_query"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < query_ids.size(); ++i) {
        nlohmann::ordered_json ranks = nlohmann::ordered_json::object();
        for (const auto& s : systems) {
            ranks[s.name] = s.ranks[i] ? nlohmann::ordered_json(*s.ranks[i]) : nlohmann::ordered_json();
        }
        j["per_query"].push_back({{"id", query_ids[i]}, {"ranks", std::move(ranks)}});
    }
    return j;
}

std::string EvalReport::to_table() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "documents %zu  frames %zu  queries %zu  dropped %zu  depth %zu\n",
                  n_documents, n_frames, n_queries, dropped_queries, depth);
    out += line;
    std::size_t width = 6;
    for (const auto& s : systems) width = std::max(width, s.name.size());
    const std::string recall_header = "R@" + std::to_string(k_report);
    std::snprintf(line, sizeof line, "%-*s  %8s  %8s\n", static_cast<int>(width), "system", "MRR",
                  recall_header.c_str());
    out += line;
    for (const auto& s : systems) {
        std::snprintf(line, sizeof line, "%-*s  %8.4f  %8.4f\n", static_cast<int>(width), s.name.c_str(),
                      s.mrr, s.recall);
        out += line;
    }
    return out;
}

EvalReport run_eval(const EvalDataset& dataset, std::span<const Retriever> systems,
                    const EvalOptions& options) {
    if (dataset.queries.empty()) throw InvalidInputError("dataset has no queries");
    if (options.depth == 0) throw InvalidInputError("ranking depth must be >= 1");
    dataset.validate();
    std::unordered_set<std::string_view> known;
    for (const auto& f : dataset.frames) known.insert(f.frame_id);

    EvalReport report;
    report.n_documents = dataset.documents.size();
    report.n_frames = dataset.frames.size();
    report.n_queries = dataset.queries.size();
    report.dropped_queries = dataset.dropped_queries;
    report.depth = options.depth;
    report.k_report = options.k_report;
    for (const auto& q : dataset.queries) report.query_ids.push_back(q.id);

    for (const auto& sys : systems) {
        SystemEval result{sys.name, 0.0, 0.0, std::vector<Rank>(dataset.queries.size())};
        const auto rank_one = [&](std::size_t qi) {
            const auto& q = dataset.queries[qi];
            auto ids = sys.search(q.text, options.depth);
            if (ids.size() > options.depth) ids.resize(options.depth);
            Rank rank;
            for (std::size_t pos = 0; pos < ids.size(); ++pos) {
                if (!known.contains(ids[pos])) {
                    throw Error("system '" + sys.name + "' returned unknown frame id '" + ids[pos] + "'");
                }
                if (!rank && q.gold.contains(ids[pos])) rank = pos + 1;
            }
            result.ranks[qi] = rank;
        };

        const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, dataset.queries.size()));
        if (threads == 1) {
            for (std::size_t qi = 0; qi < dataset.queries.size(); ++qi) rank_one(qi);
        } else {
            std::exception_ptr failure;
            std::mutex failure_mutex;
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < threads; ++t) {
                pool.emplace_back([&, t] {
                    try {
                        for (std::size_t qi = t; qi < dataset.queries.size(); qi += threads) rank_one(qi);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                });
            }
            for (auto& th : pool) th.join();
            if (failure) std::rethrow_exception(failure);
        }
        result.mrr = mrr(result.ranks);
        result.recall = recall_at(result.ranks, options.k_report);
        report.systems.push_back(std::move(result));
    }
    return report;
}

}  // namespace sentqa
