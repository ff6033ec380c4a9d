#pragma once

#include <stdexcept>
#include <string>

namespace facetda {

/// Base of every error raised by the library. `kind()` is a stable,
/// machine-readable tag used by the CLI and the HTTP service.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Malformed input file; the message carries the line/frame location.
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error("format", what) {}
};

// Well-formed input that breaks a data-model invariant.
struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& what) : Error("parameter", what) {}
};

struct NotFoundError : Error {
  explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

}  // namespace facetda
