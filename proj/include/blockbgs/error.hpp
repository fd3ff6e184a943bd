#pragma once

#include <stdexcept>
#include <string>

namespace blockbgs {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument or configuration value outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A netpbm file that could not be decoded.
class DecodeError : public Error {
 public:
  enum class Kind { malformed_header, truncated_payload, unsupported_maxval };

  DecodeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Frames of a sequence that cannot be processed together.
class SequenceError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// An operation invoked in a state that does not permit it.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Input data (masks, tracks, scripts) violating its own invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace blockbgs
