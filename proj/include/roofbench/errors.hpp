#ifndef ROOFBENCH_ERRORS_HPP
#define ROOFBENCH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace roofbench {

// Bad shapes, mismatched dimensions, invalid parameter values.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An input violates a documented precondition (non-member point, non-unitary
// matrix, mixed state where a pure one is required, ...).
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Jacobian rank at a member point disagrees with the declared dimension.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No decomposition of the target point was found (target likely outside conv V).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedScaleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::string token)
      : std::runtime_error(what), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

}  // namespace roofbench

#endif  // ROOFBENCH_ERRORS_HPP
