#pragma once

#include <stdexcept>
#include <string>

namespace nflsim {

// Shape or layout mismatch between parameters, batches and specs.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration. `key()` names the offending key
// path when one is known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message, std::string key = {})
      : std::runtime_error(key.empty() ? message : key + ": " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

// A partition plan that cannot be realised on the given dataset.
class PartitionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violations of the round protocol (empty aggregation input, mismatched
// reports, and so on).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by a client that has no training data to work with; the round
// driver treats it as a skipped client.
class SkipClient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nflsim
