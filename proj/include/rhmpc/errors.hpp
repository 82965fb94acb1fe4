#pragma once

#include <stdexcept>
#include <string>

namespace rhmpc {

// Mismatched or inconsistent array/matrix dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical trajectory left the representable range (NaN/Inf); carries the
// simulation time at which the first non-finite value was produced.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(double time)
      : std::runtime_error("non-finite state encountered at t=" +
                           std::to_string(time) + " s"),
        time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Bad or inconsistent configuration (unknown key, invalid value, missing
// required entry, unusable option combination).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A structural rank requirement failed (e.g. unobservable pair); carries the
// achieved rank.
class RankDeficiencyError : public std::runtime_error {
 public:
  RankDeficiencyError(int rank, int required)
      : std::runtime_error("rank deficiency: rank " + std::to_string(rank) +
                           " < required " + std::to_string(required)),
        rank_(rank),
        required_(required) {}
  int rank() const noexcept { return rank_; }
  int required() const noexcept { return required_; }

 private:
  int rank_;
  int required_;
};

// A relative performance ratio could not be formed because the reference
// (denominator) index is zero; carries the affected row label.
class DegenerateReferenceError : public std::runtime_error {
 public:
  explicit DegenerateReferenceError(const std::string& row)
      : std::runtime_error("reference index is zero for row " + row),
        row_(row) {}
  const std::string& row() const noexcept { return row_; }

 private:
  std::string row_;
};

}  // namespace rhmpc
