#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "sentqa/corpus.hpp"
#include "sentqa/trainer.hpp"

namespace sentqa {

/// Synthetic low-overlap QA suite. Every answer sentence names an entity and
/// four slots (action, target, method, data source); its question repeats the
/// entity but phrases each slot with a disjoint synonym, so lexical matching
/// only narrows the search to the entity. With `overlap_probability` a slot
/// keeps the answer's own word.
struct ParaphraseSuiteConfig {
    std::size_t documents = 120;
    std::size_t sentences_per_document = 5;
    std::size_t queries = 250;
    std::size_t training_pairs = 1500;
    double overlap_probability = 0.2;
    std::uint64_t seed = 7;
};

struct ParaphraseSuite {
    std::vector<Document> documents;  // doc ids match the dataset's "a<i>p0"
    nlohmann::json dataset;           // reading-comprehension interchange JSON
    std::vector<QaTriple> training;   // built from sentences disjoint from the documents
};

ParaphraseSuite generate_paraphrase_suite(const ParaphraseSuiteConfig& config = {});

}  // namespace sentqa
