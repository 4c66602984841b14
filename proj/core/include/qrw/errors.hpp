#pragma once

#include <stdexcept>
#include <string>

namespace qrw {

// Base for all categorized errors. category() feeds the CLI's exit
// diagnostics ("error: <category>: <message>").
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

// Malformed input data (bad JSON line, bad TSV row, ...).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error("parse", m) {}
};

// Referential integrity violation (dangling doc_id, interaction not in
// results, ...).
class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& m) : Error("integrity", m) {}
};

// Invalid configuration value.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

// Caller broke an operation's precondition.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& m) : Error("contract", m) {}
};

// Persisted artifact is corrupt or has the wrong version.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error("format", m) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

// Training cannot proceed (no usable samples, divergence).
class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& m) : Error("training", m) {}
};

// An external intent verifier failed on a sample.
class VerificationError : public Error {
 public:
  explicit VerificationError(const std::string& m) : Error("verification", m) {}
};

}  // namespace qrw
