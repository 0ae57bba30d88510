#pragma once

#include <stdexcept>
#include <string>

namespace magmix {

/// A caller broke a documented precondition (shape mismatch, off-bin frequency, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration: unknown mode, incommensurate duration, stripes too narrow.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration produced non-finite values.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t cell, double time)
      : std::runtime_error(what), cell_(cell), time_(time) {}
  std::size_t cell() const noexcept { return cell_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t cell_;
  double time_;
};

/// Relaxation hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double final_torque)
      : std::runtime_error(what), final_torque_(final_torque) {}
  double final_torque() const noexcept { return final_torque_; }

 private:
  double final_torque_;
};

/// A file could not be read or written; the message names the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace magmix
