#pragma once

#include <stdexcept>
#include <string>

namespace isocalm {

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input document or argument failed validation. `path` names the offending
/// field (e.g. "reg.groups[1]") so callers can report it verbatim.
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace isocalm
