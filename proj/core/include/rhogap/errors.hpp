#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rhogap {

using InvalidArgument = std::invalid_argument;

// Raised when a positive-definite factorization fails even after the
// maximum jitter was added to the diagonal.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double last_jitter)
      : std::runtime_error(what), last_jitter_(last_jitter) {}
  double last_jitter() const { return last_jitter_; }

 private:
  double last_jitter_;
};

// Fewer samples are available than an M-fill distance requires.
class InsufficientData : public std::runtime_error {
 public:
  InsufficientData(std::size_t available, std::size_t required)
      : std::runtime_error("insufficient data: have " + std::to_string(available) +
                           " samples, need at least " + std::to_string(required)),
        available_(available),
        required_(required) {}
  std::size_t available() const { return available_; }
  std::size_t required() const { return required_; }

 private:
  std::size_t available_;
  std::size_t required_;
};

// A point where a formula's precondition does not hold (e.g. the logarithm in
// the required fill distance is undefined, or the tau precondition fails).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// exhaustive_select refuses when the number of candidate subsets is too large.
class CombinatorialLimit : public std::runtime_error {
 public:
  CombinatorialLimit(double count, double limit)
      : std::runtime_error("exhaustive search over " + std::to_string(count) +
                           " subsets exceeds limit " + std::to_string(limit)),
        count_(count) {}
  double count() const { return count_; }

 private:
  double count_;
};

}  // namespace rhogap
