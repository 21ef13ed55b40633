#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quadopt {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A 1x1 region was asked to split.
class DegenerateRegionError : public Error {
 public:
  using Error::Error;
};

class UnknownLeafError : public Error {
 public:
  using Error::Error;
};

/// Malformed serialized text; `offset()` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// An uncached evaluation would push the ledger past its cap.
class BudgetExhaustedError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class PoolExhaustedError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Persisted run state does not agree with itself.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace quadopt
