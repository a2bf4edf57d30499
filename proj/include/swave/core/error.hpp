#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace swave {

// Thrown when a requested grid or basis would exceed the memory budget.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when two objects were built on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(std::size_t step, double magnitude)
      : std::runtime_error("solver diverged at step " + std::to_string(step) +
                           " (|u| = " + std::to_string(magnitude) + ")"),
        step_(step),
        magnitude_(magnitude) {}

  std::size_t step() const noexcept { return step_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  std::size_t step_;
  double magnitude_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace swave
