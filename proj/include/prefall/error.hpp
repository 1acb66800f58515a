#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace prefall {

// Error taxonomy. The CLI maps each kind to a distinct exit code, so keep
// the categories coarse and stable.
enum class ErrorKind {
  NoInput,     // input file missing or unreadable
  Io,          // output file could not be written
  Parse,       // malformed row or field in a text input
  Structure,   // ordering/shape violation in otherwise well-formed input
  Annotation,  // label/impact-frame coupling violated
  Mapping,     // activity id not covered by the activity map
  Config,      // invalid configuration value (joint map, net config, flags)
  Extraction,  // requested window does not fit the sequence
  MaskedData,  // requested window overlaps invalid features
  Numeric,     // non-finite value where a finite one is required
  Format,      // bad magic, truncation or shape mismatch in a binary file
  Version,     // binary file written by a newer format version
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace prefall
