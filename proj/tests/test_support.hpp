#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blner/error.hpp"
#include "blner/types.hpp"

namespace blner::test {

// Runs fn and reports which error category it raised, if any.
template <typename Fn>
std::optional<ErrorKind> kind_of(Fn&& fn) {
  try {
    std::forward<Fn>(fn)();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

// Collects warn() output for the lifetime of the object.
class WarningLog {
 public:
  WarningLog() {
    old_ = set_warn_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningLog() { set_warn_handler(old_); }

  bool contains(const std::string& needle) const {
    for (const std::string& m : messages)
      if (m.find(needle) != std::string::npos) return true;
    return false;
  }

  std::vector<std::string> messages;

 private:
  WarnHandler old_;
};

inline Sentence make_sentence(const std::vector<std::string>& tokens,
                              std::vector<Entity> gold = {}) {
  Sentence s;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    s.tokens.push_back({tokens[i], static_cast<int>(i) + 1});
  s.gold = std::move(gold);
  attach_surfaces(s);
  return s;
}

inline Dataset make_dataset(std::vector<Sentence> sentences,
                            std::vector<std::string> type_names,
                            Split split = Split::train) {
  Dataset d;
  d.split = split;
  d.sentences = std::move(sentences);
  d.type_names = std::move(type_names);
  return d;
}

}  // namespace blner::test
