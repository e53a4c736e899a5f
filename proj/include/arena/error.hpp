#pragma once

#include <stdexcept>
#include <string>

namespace arena {

class ArenaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent dex data. `location` is "file:line" or "file:line:field".
class DataError : public ArenaError {
 public:
  DataError(std::string location, const std::string& message)
      : ArenaError(location.empty() ? message : location + ": " + message),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class UnknownNameError : public ArenaError {
 public:
  explicit UnknownNameError(const std::string& name)
      : ArenaError("unknown name: " + name), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class BattleError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

class IllegalActionError : public BattleError {
 public:
  IllegalActionError(int side, const std::string& reason)
      : BattleError("illegal action for side " + std::to_string(side + 1) + ": " + reason),
        side_(side),
        reason_(reason) {}
  int side() const noexcept { return side_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  int side_;
  std::string reason_;
};

class LogError : public ArenaError {
 public:
  using ArenaError::ArenaError;
};

}  // namespace arena
