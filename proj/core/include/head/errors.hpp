#pragma once

#include <stdexcept>
#include <string>

namespace head {

// Error taxonomy shared by the library and the CLI. The CLI maps each class
// to a distinct exit code (see tools/).

// Caller misuse: bad shapes, bad arguments, empty inputs where data is required.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Readable file with content that does not match the expected format.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric quantity left its valid domain (manifold constraint violations,
// non-finite losses). `term` names the offending quantity when known.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::string term = {})
      : std::runtime_error(what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

// Negative sampling ran out of candidates for a user.
class SamplingExhaustedError : public std::runtime_error {
 public:
  explicit SamplingExhaustedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace head
