#pragma once

#include <stdexcept>
#include <string>

namespace rtphase {

// Invalid parameter value (non-positive mean, negative count, label out of range, ...).
class Domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Series lengths that do not line up.
class Shape_error : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Query beyond the populated part of a series.
class Out_of_range_error : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed input file; `row()` is the 1-based line number (0 when not row-specific).
class Parse_error : public std::runtime_error {
 public:
  Parse_error(const std::string& what, int row = 0)
      : std::runtime_error{what}, row_{row} {}
  auto row() const -> int { return row_; }

 private:
  int row_;
};

// Stick durations never covered the horizon within Kmax sticks.
class Truncation_overflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Results file with the wrong schema name/version or a missing trailer.
class Schema_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Data or configuration that cannot be fitted (e.g. all-zero after trimming).
class Fit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every chain stalled; `snapshot()` holds a JSON dump of the final chain states.
class Sampler_failure : public std::runtime_error {
 public:
  Sampler_failure(const std::string& what, std::string snapshot)
      : std::runtime_error{what}, snapshot_{std::move(snapshot)} {}
  auto snapshot() const -> const std::string& { return snapshot_; }

 private:
  std::string snapshot_;
};

}  // namespace rtphase
