#pragma once

#include <stdexcept>
#include <string>

namespace refmark {

// Base of every error raised by the library. The CLI maps ConfigError to
// exit code 1 and every other subclass to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index out of bounds, mask/cloud mismatch, length mismatch.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Missing or unknown field/token in a file.
class SchemaError : public Error {
 public:
  SchemaError(const std::string& what, std::string field)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Truncated or malformed payload.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Too few points, collinear samples, k larger than the cloud.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage failed; what() carries "<stage>: <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace refmark
