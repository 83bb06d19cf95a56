#pragma once

#include <stdexcept>
#include <string>

namespace octlts {

// Bad arguments to a public operation (mismatched keys, out-of-range levels, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation called on an object whose state does not allow it.
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Timestepping scheme not supported by the requested driver.
class UnsupportedScheme : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Mismatch between what an exchange plan prescribes and what a rank posted.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int from, int to, const std::string& what)
      : std::runtime_error("exchange " + std::to_string(from) + "->" + std::to_string(to) + ": " +
                           what),
        from_(from),
        to_(to) {}
  int from() const noexcept { return from_; }
  int to() const noexcept { return to_; }

 private:
  int from_;
  int to_;
};

// Invalid configuration value; key() names the offending entry.
class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : InvalidInput("config '" + key + "': " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace octlts
