#include "blner/types.hpp"

#include <algorithm>
#include <iostream>
#include <unordered_set>
#include <utility>

namespace blner {

namespace {

WarnHandler& warn_handler() {
  static WarnHandler handler = [](const std::string& message) {
    std::cerr << "warning: " << message << "\n";
  };
  return handler;
}

}  // namespace

void warn(const std::string& message) { warn_handler()(message); }

WarnHandler set_warn_handler(WarnHandler handler) {
  return std::exchange(warn_handler(), std::move(handler));
}

const char* to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

std::string surface_of(const Sentence& sentence, int start, int end) {
  if (start < 1 || end < start || end > sentence.size())
    fail(ErrorKind::input, "surface_of: span " + std::to_string(start) + ".." +
                               std::to_string(end) + " outside sentence of " +
                               std::to_string(sentence.size()) + " tokens");
  std::string out = sentence.tokens[start - 1].text;
  for (int i = start; i < end; ++i) {
    out += ' ';
    out += sentence.tokens[i].text;
  }
  return out;
}

void attach_surfaces(Sentence& sentence) { attach_surfaces(sentence, sentence.gold); }

void attach_surfaces(const Sentence& sentence, std::vector<Entity>& entities) {
  for (Entity& e : entities) e.surface = surface_of(sentence, e.start, e.end);
}

void validate_sentence(const Sentence& sentence) {
  if (sentence.tokens.empty()) fail(ErrorKind::schema, "sentence has no tokens");
  const int n = sentence.size();
  for (int i = 0; i < n; ++i) {
    const Token& t = sentence.tokens[i];
    if (t.index != i + 1)
      fail(ErrorKind::schema, "token " + std::to_string(i) + " has index " +
                                  std::to_string(t.index) + ", expected " +
                                  std::to_string(i + 1));
    if (t.text.empty()) fail(ErrorKind::schema, "empty token text at position " +
                                                    std::to_string(i + 1));
    for (char c : t.text)
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r')
        fail(ErrorKind::schema, "whitespace inside token at position " +
                                    std::to_string(i + 1));
  }
  std::vector<const Entity*> order;
  order.reserve(sentence.gold.size());
  for (const Entity& e : sentence.gold) {
    if (e.start < 1 || e.start > e.end || e.end > n)
      fail(ErrorKind::schema, "entity span " + std::to_string(e.start) + ".." +
                                  std::to_string(e.end) +
                                  " outside sentence of " + std::to_string(n) +
                                  " tokens");
    if (e.etype.empty()) fail(ErrorKind::schema, "entity with empty type");
    order.push_back(&e);
  }
  std::sort(order.begin(), order.end(),
            [](const Entity* a, const Entity* b) { return a->start < b->start; });
  for (std::size_t i = 1; i < order.size(); ++i)
    if (order[i]->start <= order[i - 1]->end)
      fail(ErrorKind::schema, "overlapping gold entities at tokens " +
                                  std::to_string(order[i]->start) + ".." +
                                  std::to_string(order[i - 1]->end));
}

void validate_dataset(const Dataset& dataset) {
  std::unordered_set<std::string> names;
  for (const std::string& name : dataset.type_names) {
    if (name.empty()) fail(ErrorKind::schema, "empty type name");
    if (name == TypeSet::kNoneName || name == "O")
      fail(ErrorKind::schema, "reserved type name '" + name + "'");
    if (!names.insert(name).second)
      fail(ErrorKind::schema, "duplicate type name '" + name + "'");
  }
  for (std::size_t i = 0; i < dataset.sentences.size(); ++i) {
    const Sentence& s = dataset.sentences[i];
    try {
      validate_sentence(s);
    } catch (const Error& e) {
      fail(e.kind(), "sentence " + std::to_string(i) + ": " + e.what());
    }
    for (const Entity& e : s.gold)
      if (!names.count(e.etype))
        fail(ErrorKind::schema, "sentence " + std::to_string(i) + ": entity type '" +
                                    e.etype + "' not in the dataset alphabet");
  }
}

LabelScheme LabelScheme::from_types(const std::vector<std::string>& type_names) {
  LabelScheme scheme;
  scheme.types_ = type_names;
  scheme.labels_.reserve(2 * type_names.size() + 1);
  scheme.labels_.push_back("O");
  for (const std::string& t : type_names) {
    scheme.labels_.push_back("B-" + t);
    scheme.labels_.push_back("I-" + t);
  }
  return scheme;
}

int LabelScheme::id_of(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return static_cast<int>(i);
  return -1;
}

const std::string TypeSet::kNoneName = "None";

TypeSet TypeSet::from_names(const std::vector<std::string>& type_names) {
  TypeSet types;
  types.names_ = type_names;
  types.names_.push_back(kNoneName);
  return types;
}

int TypeSet::id_of(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

}  // namespace blner
