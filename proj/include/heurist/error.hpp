#pragma once

#include <stdexcept>
#include <string>

namespace heurist {

// Failure classes map one-to-one onto CLI exit codes.
enum class ErrorCategory { parse = 2, validation = 3, internal = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string &what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

private:
  ErrorCategory category_;
};

class ParseError : public Error {
public:
  explicit ParseError(const std::string &what)
      : Error(ErrorCategory::parse, what) {}
};

class ValidationError : public Error {
public:
  explicit ValidationError(const std::string &what)
      : Error(ErrorCategory::validation, what) {}
};

class DuplicateIdError : public ValidationError {
public:
  explicit DuplicateIdError(const std::string &what) : ValidationError(what) {}
};

class DimensionError : public ValidationError {
public:
  explicit DimensionError(const std::string &what) : ValidationError(what) {}
};

// Raised when no row of a label matrix carries any vote.
class UnfitModelError : public ValidationError {
public:
  explicit UnfitModelError(const std::string &what) : ValidationError(what) {}
};

// An upstream file no longer matches the hash recorded in its manifest.
class StaleInputError : public ValidationError {
public:
  explicit StaleInputError(const std::string &what) : ValidationError(what) {}
};

} // namespace heurist
