#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace geel {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed an ill-formed argument (empty set, bad probability, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Sizes of two inputs disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a connected graph.
class ConnectivityError : public Error {
 public:
  using Error::Error;
};

/// Edge list handed to the encoder is not strictly sorted.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Pair or id outside the vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

/// Position index exceeds the positional table.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Unknown node or edge type.
class AlphabetError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf detected in a forward pass.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Why a token stream failed to decode.
enum class DecodeFailure {
  unsorted,
  duplicate_edge,
  overflow,
  malformed,
  grammar,
};

inline const char* to_string(DecodeFailure f) {
  switch (f) {
    case DecodeFailure::unsorted: return "unsorted";
    case DecodeFailure::duplicate_edge: return "duplicate_edge";
    case DecodeFailure::overflow: return "overflow";
    case DecodeFailure::malformed: return "malformed";
    case DecodeFailure::grammar: return "grammar";
  }
  return "unknown";
}

/// Raised by strict decoders. `index` is the offending element of the
/// sequence (pair index for gap sequences, token position for streams).
class DecodeError : public Error {
 public:
  DecodeError(DecodeFailure kind, std::size_t index, const std::string& what)
      : Error(std::string(to_string(kind)) + " at index " + std::to_string(index) + ": " + what),
        kind_(kind),
        index_(index) {}
  DecodeFailure kind() const noexcept { return kind_; }
  std::size_t index() const noexcept { return index_; }

 private:
  DecodeFailure kind_;
  std::size_t index_;
};

/// Attributed stream violates the token transition rules.
class GrammarError : public DecodeError {
 public:
  GrammarError(std::size_t position, const std::string& what)
      : DecodeError(DecodeFailure::grammar, position, what) {}
};

/// Malformed file content; `line` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid run configuration (unknown key, bad value).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace geel
