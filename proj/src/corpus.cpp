#include "blner/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_set>

#include "blner/numeric.hpp"
#include "blner/seqdec.hpp"

namespace blner {

namespace {

bool blank_line(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

void chop_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

struct LabelName {
  bool begin = false;  // B- vs I-; meaningless for O
  std::string type;    // empty for O
};

LabelName split_label(const std::string& label, int line_no) {
  if (label == "O") return {};
  if (label.size() > 2 && (label[0] == 'B' || label[0] == 'I') && label[1] == '-')
    return {label[0] == 'B', label.substr(2)};
  fail(ErrorKind::parse,
       "line " + std::to_string(line_no) + ": malformed BIO label '" + label + "'");
}

}  // namespace

Dataset parse_conll(std::istream& in, Split split) {
  Dataset out;
  out.split = split;

  std::vector<std::string> types;
  std::unordered_set<std::string> seen_types;
  auto note_type = [&](const std::string& t) {
    if (seen_types.insert(t).second) types.push_back(t);
  };

  Sentence current;
  std::vector<LabelName> labels;
  std::vector<int> lines;
  int line_no = 0;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    std::vector<Entity> open;  // via combine_labels below
    LabelScheme scheme = LabelScheme::from_types(types);
    std::vector<int> ids(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const LabelName& l = labels[i];
      if (l.type.empty()) {
        ids[i] = LabelScheme::kOutside;
        continue;
      }
      const int type = static_cast<int>(
          std::find(types.begin(), types.end(), l.type) - types.begin());
      ids[i] = l.begin ? scheme.begin_id(type) : scheme.inside_id(type);
      if (!l.begin) {
        const bool continues = i > 0 && !labels[i - 1].type.empty() &&
                               labels[i - 1].type == l.type;
        if (!continues)
          warn("line " + std::to_string(lines[i]) + ": I-" + l.type +
               " does not continue a " + l.type + " entity; starting a new one");
      }
    }
    current.gold = combine_labels(ids, scheme);
    attach_surfaces(current);
    out.sentences.push_back(std::move(current));
    current = {};
    labels.clear();
    lines.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    chop_cr(line);
    if (blank_line(line)) {
      flush();
      continue;
    }
    std::istringstream fields(line);
    std::string token, label, extra;
    if (!(fields >> token >> label) || (fields >> extra))
      fail(ErrorKind::parse, "line " + std::to_string(line_no) +
                                 ": expected 2 columns 'token label', got '" + line +
                                 "'");
    LabelName name = split_label(label, line_no);
    if (!name.type.empty()) note_type(name.type);
    current.tokens.push_back({token, static_cast<int>(current.tokens.size()) + 1});
    labels.push_back(std::move(name));
    lines.push_back(line_no);
  }
  flush();

  out.type_names = std::move(types);
  validate_dataset(out);
  return out;
}

Dataset parse_conll_text(const std::string& text, Split split) {
  std::istringstream in(text);
  return parse_conll(in, split);
}

void serialize_conll(const Dataset& dataset, std::ostream& out) {
  const LabelScheme scheme = LabelScheme::from_types(dataset.type_names);
  for (std::size_t s = 0; s < dataset.sentences.size(); ++s) {
    if (s > 0) out << '\n';
    const Sentence& sentence = dataset.sentences[s];
    const std::vector<int> ids = bio_encode(sentence, scheme);
    for (int i = 0; i < sentence.size(); ++i)
      out << sentence.tokens[i].text << ' ' << scheme.label(ids[i]) << '\n';
  }
}

std::string to_conll(const Dataset& dataset) {
  std::ostringstream out;
  serialize_conll(dataset, out);
  return out.str();
}

Dataset parse_span_json(std::istream& in, Split split, bool require_flat) {
  Dataset out;
  out.split = split;

  std::vector<std::string> types;
  std::unordered_set<std::string> seen_types;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    chop_cr(line);
    if (blank_line(line)) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, where + e.what());
    }
    if (!j.is_object() || !j.contains("tokens") || !j.contains("entities"))
      fail(ErrorKind::parse, where + "expected {\"tokens\":[...],\"entities\":[...]}");

    Sentence sentence;
    if (!j["tokens"].is_array())
      fail(ErrorKind::parse, where + "\"tokens\" is not an array");
    for (const auto& t : j["tokens"]) {
      if (!t.is_string())
        fail(ErrorKind::parse, where + "\"tokens\" holds a non-string");
      sentence.tokens.push_back(
          {t.get<std::string>(), static_cast<int>(sentence.tokens.size()) + 1});
    }

    if (!j["entities"].is_array())
      fail(ErrorKind::parse, where + "\"entities\" is not an array");
    for (const auto& e : j["entities"]) {
      if (!e.is_object() || !e.contains("start") || !e.contains("end") ||
          !e.contains("type") || !e["start"].is_number_integer() ||
          !e["end"].is_number_integer() || !e["type"].is_string())
        fail(ErrorKind::parse,
             where + "entity must be {\"start\":int,\"end\":int,\"type\":str}");
      Entity entity;
      entity.start = e["start"].get<int>();
      entity.end = e["end"].get<int>();
      entity.etype = e["type"].get<std::string>();
      if (entity.start < 1 || entity.start > entity.end ||
          entity.end > sentence.size())
        fail(ErrorKind::parse, where + "entity span " + std::to_string(entity.start) +
                                   ".." + std::to_string(entity.end) +
                                   " outside sentence of " +
                                   std::to_string(sentence.size()) + " tokens");
      if (entity.etype.empty() || entity.etype == TypeSet::kNoneName)
        fail(ErrorKind::parse, where + "illegal entity type '" + entity.etype + "'");
      if (seen_types.insert(entity.etype).second) types.push_back(entity.etype);
      sentence.gold.push_back(std::move(entity));
    }
    if (require_flat)
      for (std::size_t a = 0; a < sentence.gold.size(); ++a)
        for (std::size_t b = a + 1; b < sentence.gold.size(); ++b)
          if (overlaps(sentence.gold[a], sentence.gold[b]))
            fail(ErrorKind::parse, where + "overlapping entities in gold data");
    attach_surfaces(sentence);
    out.sentences.push_back(std::move(sentence));
  }

  out.type_names = std::move(types);
  if (require_flat) validate_dataset(out);
  return out;
}

void serialize_span_json(const Dataset& dataset, std::ostream& out) {
  for (const Sentence& sentence : dataset.sentences) {
    nlohmann::json j;
    j["tokens"] = nlohmann::json::array();
    for (const Token& t : sentence.tokens) j["tokens"].push_back(t.text);
    j["entities"] = nlohmann::json::array();
    for (const Entity& e : sentence.gold)
      j["entities"].push_back({{"start", e.start}, {"end", e.end}, {"type", e.etype}});
    out << j.dump() << '\n';
  }
}

Dataset read_dataset_file(const std::string& path, Split split, bool require_flat) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  int c;
  while ((c = in.peek()) != EOF && (c == ' ' || c == '\t' || c == '\n' || c == '\r'))
    in.get();
  const bool span_json = c == '{';
  in.seekg(0);
  try {
    return span_json ? parse_span_json(in, split, require_flat)
                     : parse_conll(in, split);
  } catch (const Error& e) {
    fail(e.kind(), path + ": " + e.what());
  }
}

void write_dataset_file(const Dataset& dataset, const std::string& path,
                        bool as_span_json) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::io, "cannot write " + tmp);
    if (as_span_json)
      serialize_span_json(dataset, out);
    else
      serialize_conll(dataset, out);
    if (!out.good()) fail(ErrorKind::io, "short write to " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot move " + tmp + " to " + path);
}

std::vector<int> bio_encode(const Sentence& sentence, const LabelScheme& scheme) {
  std::vector<int> ids(sentence.size(), LabelScheme::kOutside);
  for (const Entity& e : sentence.gold) {
    int type = -1;
    for (int t = 0; t < scheme.entity_type_count(); ++t)
      if (scheme.type_name(t) == e.etype) {
        type = t;
        break;
      }
    if (type < 0)
      fail(ErrorKind::schema, "entity type '" + e.etype + "' not in the label scheme");
    if (e.start < 1 || e.end > sentence.size())
      fail(ErrorKind::schema, "entity span outside the sentence");
    for (int i = e.start; i <= e.end; ++i) {
      if (ids[i - 1] != LabelScheme::kOutside)
        fail(ErrorKind::schema, "overlapping entities at token " + std::to_string(i));
      ids[i - 1] = i == e.start ? scheme.begin_id(type) : scheme.inside_id(type);
    }
  }
  return ids;
}

double oov_density(const Dataset& test, const Dataset& train) {
  std::unordered_set<std::string> vocab;
  for (const Sentence& s : train.sentences)
    for (const Token& t : s.tokens) vocab.insert(t.text);
  long total = 0, oov = 0;
  for (const Sentence& s : test.sentences)
    for (const Token& t : s.tokens) {
      ++total;
      if (!vocab.count(t.text)) ++oov;
    }
  if (total == 0) fail(ErrorKind::input, "oov_density of an empty test set");
  return static_cast<double>(oov) / static_cast<double>(total);
}

namespace {

constexpr std::array<const char*, 16> kMarkerSyllables = {
    "bal", "cor", "dev", "fim", "gol", "hur", "jan", "kel",
    "lom", "mun", "nor", "pes", "qui", "ros", "tam", "vex"};

constexpr std::array<const char*, 16> kTailSyllables = {
    "a",   "e",   "i",  "o",   "u",   "ar", "en", "il",
    "osh", "eth", "ix", "oss", "umb", "yr", "om", "ul"};

constexpr std::array<const char*, 32> kFillerWords = {
    "the",    "a",        "of",     "on",      "in",     "with",  "near",
    "after",  "before",   "team",   "report",  "market", "crowd", "office",
    "street", "meeting",  "player", "morning", "signal", "visit", "note",
    "again",  "slowly",   "around", "under",   "toward", "plain", "quiet",
    "record", "schedule", "summary", "update"};

// Type-indexed first syllable keeps every type's token vocabulary disjoint.
std::string marker_of(int type) {
  std::string marker;
  int t = type;
  do {
    marker += kMarkerSyllables[t % kMarkerSyllables.size()];
    t /= static_cast<int>(kMarkerSyllables.size());
  } while (t > 0);
  marker[0] = static_cast<char>(marker[0] - 'a' + 'A');
  return marker;
}

}  // namespace

SyntheticCorpus gen_synthetic(std::uint64_t seed, int n_sentences,
                              const std::vector<std::string>& type_names) {
  if (n_sentences < 1) fail(ErrorKind::input, "gen_synthetic needs n_sentences >= 1");
  if (type_names.empty()) fail(ErrorKind::input, "gen_synthetic needs >= 1 type");

  const int m = static_cast<int>(type_names.size());
  Rng rng(seed);

  // Each phrase owns its tokens outright, so no span is a positive in one
  // context and a negative in another.
  constexpr int kPhrasesPerType = 12;
  std::vector<std::vector<std::vector<std::string>>> phrases(m);
  std::unordered_set<std::string> used_tokens;
  for (int t = 0; t < m; ++t) {
    const std::string marker = marker_of(t);
    for (int p = 0; p < kPhrasesPerType; ++p) {
      const int len = 1 + static_cast<int>(rng.index(4));
      std::vector<std::string> phrase;
      for (int w = 0; w < len; ++w) {
        std::string token;
        do {
          token = marker;
          token += kTailSyllables[rng.index(kTailSyllables.size())];
          token += kTailSyllables[rng.index(kTailSyllables.size())];
        } while (!used_tokens.insert(token).second);
        phrase.push_back(std::move(token));
      }
      phrases[t].push_back(std::move(phrase));
    }
  }

  SyntheticCorpus corpus;
  corpus.train.split = Split::train;
  corpus.dev.split = Split::dev;
  corpus.test.split = Split::test;
  corpus.train.type_names = type_names;
  corpus.dev.type_names = type_names;
  corpus.test.type_names = type_names;

  auto filler = [&] {
    return std::string(kFillerWords[rng.index(kFillerWords.size())]);
  };

  for (int idx = 0; idx < n_sentences; ++idx) {
    Sentence sentence;
    auto push = [&](std::string text) {
      sentence.tokens.push_back(
          {std::move(text), static_cast<int>(sentence.tokens.size()) + 1});
    };

    const int n_entities = 1 + static_cast<int>(rng.index(3));
    const int lead = static_cast<int>(rng.index(4));
    for (int g = 0; g < lead; ++g) push(filler());
    for (int e = 0; e < n_entities; ++e) {
      const int type = static_cast<int>(rng.index(m));
      const auto& phrase = phrases[type][rng.index(phrases[type].size())];
      Entity entity;
      entity.start = sentence.size() + 1;
      entity.end = entity.start + static_cast<int>(phrase.size()) - 1;
      entity.etype = type_names[type];
      for (const std::string& w : phrase) push(w);
      sentence.gold.push_back(std::move(entity));
      const int gap = 1 + static_cast<int>(rng.index(4));
      for (int g = 0; g < gap; ++g) push(filler());
    }
    while (sentence.size() < 5) push(filler());
    attach_surfaces(sentence);

    const int slot = idx % 10;
    Dataset& target =
        slot < 8 ? corpus.train : (slot == 8 ? corpus.dev : corpus.test);
    target.sentences.push_back(std::move(sentence));
  }

  validate_dataset(corpus.train);
  validate_dataset(corpus.dev);
  validate_dataset(corpus.test);
  return corpus;
}

}  // namespace blner
