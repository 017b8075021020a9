#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfl {

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised by the trainer when a loss value or parameter stops being finite.
class NumericalAbort : public std::runtime_error {
 public:
  NumericalAbort(std::size_t epoch, std::size_t batch, const std::string& what)
      : std::runtime_error("numerical abort at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detail
}  // namespace cfl
