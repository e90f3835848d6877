#pragma once

#include <stdexcept>
#include <string>

namespace contraction {

/// Invalid configuration: bad sizes, missing budgets, inconsistent options.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation produced a non-finite value.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg, long index = -1)
      : std::runtime_error(msg), index_(index) {}
  /// Offending sample/step index, or -1 when not applicable.
  long index() const noexcept { return index_; }

 private:
  long index_;
};

/// An estimator was asked for more than its inputs support.
class estimation_error : public std::runtime_error {
 public:
  explicit estimation_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace contraction
