#pragma once

#include <functional>
#include <stdexcept>
#include <string>

namespace blner {

// Error categories map onto CLI exit codes: io -> 2, everything else -> 1.
enum class ErrorKind {
  config,   // bad hyperparameter / flag / mode combination
  parse,    // malformed input data
  io,       // unreadable or unwritable file
  schema,   // label or type outside the declared alphabet
  shape,    // dimension mismatch
  numeric,  // non-finite value where a finite one is required
  input,    // precondition violation on an operation argument
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// Non-fatal diagnostics (BIO repairs, probability clamping). Default sink is
// stderr; tests may install their own handler or silence it.
using WarnHandler = std::function<void(const std::string&)>;
void warn(const std::string& message);
WarnHandler set_warn_handler(WarnHandler handler);

}  // namespace blner
