#pragma once

#include <span>
#include <vector>

namespace rtphase {

// Piecewise-constant R_t over days 1..T. Every day carries a 0-based phase label; the
// changepoint form (block ends T_1 < ... < T_{K-1}) is derived from runs of equal labels.
class Phase_trajectory {
 public:
  Phase_trajectory() = default;

  static auto from_labels(std::vector<double> phase_values, std::vector<int> labels)
      -> Phase_trajectory;

  // Day t belongs to phase j = #{i : T_i < t}; changepoints must satisfy 1 <= T_1 < ... < T.
  static auto from_changepoints(std::vector<double> phase_values, std::vector<int> changepoints,
                                int horizon) -> Phase_trajectory;

  auto horizon() const -> int { return static_cast<int>(labels_.size()); }
  auto phase_values() const -> std::span<const double> { return phase_values_; }
  auto labels() const -> std::span<const int> { return labels_; }
  auto daily() const -> std::span<const double> { return daily_; }
  auto at(int day) const -> double;

  // Number of distinct labels in use.
  auto occupied_phases() const -> int;

  // True when every occupied label forms a single run of days.
  auto is_contiguous() const -> bool;

  // Last day of each run except the final one.
  auto changepoints() const -> std::vector<int>;

 private:
  std::vector<double> phase_values_;
  std::vector<int> labels_;
  std::vector<double> daily_;
};

}  // namespace rtphase
