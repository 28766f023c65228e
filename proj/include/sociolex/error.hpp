#pragma once

#include <stdexcept>
#include <string>

namespace sociolex {

// Base for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: unreadable files, schema violations, invalid configs.
// The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A well-formed request that cannot be computed (empty conditioning set,
// rank-deficient design, vocabulary too small...). Exit code 1.
class AnalysisError : public Error {
 public:
  using Error::Error;
};

}  // namespace sociolex
