#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace filterbreak {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A filter line uses syntax outside the supported ABP subset.
class UnsupportedSyntax : public Error {
 public:
  using Error::Error;
};

/// A commit-log line that does not follow the JSONL schema.
class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class XmlError : public Error {
 public:
  using Error::Error;
};

/// Structurally invalid graph: unknown kinds, missing mandatory attributes,
/// duplicate ids, dangling references.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class DanglingEdge : public SchemaError {
 public:
  using SchemaError::SchemaError;
};

class AllFeaturesDropped : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class SingleClass : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class UnknownTarget : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace filterbreak
