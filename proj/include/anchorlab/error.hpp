#pragma once

#include <stdexcept>
#include <string>

namespace anchorlab {

// Caller passed something outside an operation's domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A hard size bound was exceeded (truth-table width, vocabulary size).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// An internal invariant failed; indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Dataset generation ran out of its resampling budget.
class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, unsigned long long seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"),
        seed_(seed) {}
  unsigned long long seed() const { return seed_; }

 private:
  unsigned long long seed_;
};

// Training produced a non-finite parameter.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace anchorlab
