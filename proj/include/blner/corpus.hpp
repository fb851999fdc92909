#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blner/types.hpp"

namespace blner {

// Two whitespace-separated columns "token label", blank line between
// sentences, UTF-8. Type names are inferred in first-appearance order.
// Illegal BIO transitions are repaired (stray I-X opens a new entity) and
// reported through warn().
Dataset parse_conll(std::istream& in, Split split = Split::train);
Dataset parse_conll_text(const std::string& text, Split split = Split::train);

void serialize_conll(const Dataset& dataset, std::ostream& out);
std::string to_conll(const Dataset& dataset);

// One JSON object per line:
//   {"tokens":[...],"entities":[{"start":i,"end":j,"type":"X"}]}
// with 1-based inclusive indices. require_flat enforces the non-overlap
// invariant (gold data); prediction files may carry arbitrary span lists.
Dataset parse_span_json(std::istream& in, Split split = Split::train,
                        bool require_flat = true);
void serialize_span_json(const Dataset& dataset, std::ostream& out);

// Sniffs the format (a leading '{' means span-JSON) and parses the file.
Dataset read_dataset_file(const std::string& path, Split split,
                          bool require_flat = true);
void write_dataset_file(const Dataset& dataset, const std::string& path,
                        bool as_span_json);

std::vector<int> bio_encode(const Sentence& sentence, const LabelScheme& scheme);

// Fraction of test tokens whose text never occurs in the train split;
// case-sensitive exact match.
double oov_density(const Dataset& test, const Dataset& train);

struct SyntheticCorpus {
  Dataset train;
  Dataset dev;
  Dataset test;
};

// Deterministic template-grammar corpus: sentences of 5-30 tokens, each type
// owning a distinct closed vocabulary of 1-4-token entity phrases embedded in
// filler text. Sentences are dealt to train/dev/test 8:1:1 with train filled
// first.
SyntheticCorpus gen_synthetic(std::uint64_t seed, int n_sentences,
                              const std::vector<std::string>& type_names);

}  // namespace blner
