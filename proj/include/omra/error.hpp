#pragma once

#include <stdexcept>
#include <string>

namespace omra {

// Bad input data: malformed files, shape mismatches, invalid factors.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Command-line misuse.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or activation during training / inference.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace omra
