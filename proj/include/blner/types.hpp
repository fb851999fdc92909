#pragma once

#include <string>
#include <vector>

#include "blner/error.hpp"

namespace blner {

// Token positions are 1-based; position 0 is the reserved global/start slot.
struct Token {
  std::string text;
  int index = 0;
};

// Inclusive token span with a type drawn from the dataset's type alphabet
// (never the None type). surface is the space-joined token text.
struct Entity {
  int start = 0;
  int end = 0;
  std::string etype;
  std::string surface;

  int length() const { return end - start + 1; }
};

inline bool same_mention(const Entity& a, const Entity& b) {
  return a.start == b.start && a.end == b.end && a.etype == b.etype;
}

inline bool spans_overlap(int s1, int e1, int s2, int e2) {
  return s1 <= e2 && s2 <= e1;
}

inline bool overlaps(const Entity& a, const Entity& b) {
  return spans_overlap(a.start, a.end, b.start, b.end);
}

struct Sentence {
  std::vector<Token> tokens;
  std::vector<Entity> gold;

  int size() const { return static_cast<int>(tokens.size()); }
};

enum class Split { train, dev, test };

const char* to_string(Split split);

struct Dataset {
  Split split = Split::train;
  std::vector<Sentence> sentences;
  std::vector<std::string> type_names;
};

std::string surface_of(const Sentence& sentence, int start, int end);

// Fill Entity::surface from the owning sentence's tokens.
void attach_surfaces(Sentence& sentence);
void attach_surfaces(const Sentence& sentence, std::vector<Entity>& entities);

// Throw ErrorKind::schema on any violated invariant.
void validate_sentence(const Sentence& sentence);
void validate_dataset(const Dataset& dataset);

// BIO label alphabet: O at index 0, then B-X before I-X per type, giving
// 2m + 1 labels for m entity types.
class LabelScheme {
 public:
  LabelScheme() = default;
  static LabelScheme from_types(const std::vector<std::string>& type_names);

  int size() const { return static_cast<int>(labels_.size()); }
  int entity_type_count() const { return static_cast<int>(types_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& type_names() const { return types_; }

  const std::string& label(int id) const { return labels_.at(id); }
  int id_of(const std::string& label) const;  // -1 when absent

  static constexpr int kOutside = 0;
  int begin_id(int type) const { return 1 + 2 * type; }
  int inside_id(int type) const { return 2 + 2 * type; }
  bool is_begin(int id) const { return id > 0 && id % 2 == 1; }
  bool is_inside(int id) const { return id > 0 && id % 2 == 0; }
  int type_of(int id) const { return id <= 0 ? -1 : (id - 1) / 2; }
  const std::string& type_name(int type) const { return types_.at(type); }

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> types_;
};

// Span classification alphabet: the m entity types plus a trailing None type.
class TypeSet {
 public:
  TypeSet() = default;
  static TypeSet from_names(const std::vector<std::string>& type_names);

  int size() const { return static_cast<int>(names_.size()); }  // m + 1
  int none_id() const { return size() - 1; }
  const std::string& name(int id) const { return names_.at(id); }
  int id_of(const std::string& name) const;  // -1 when absent
  const std::vector<std::string>& names() const { return names_; }

  static const std::string kNoneName;

 private:
  std::vector<std::string> names_;
};

}  // namespace blner
