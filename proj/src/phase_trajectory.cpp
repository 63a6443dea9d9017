#include "rtphase/phase_trajectory.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "rtphase/errors.hpp"

namespace rtphase {

auto Phase_trajectory::from_labels(std::vector<double> phase_values, std::vector<int> labels)
    -> Phase_trajectory {
  auto k = std::ssize(phase_values);
  for (auto v : phase_values) {
    if (!(v >= 0.0)) {
      throw Domain_error{fmt::format("phase value {} is negative or NaN", v)};
    }
  }
  for (auto i = std::size_t{0}; i != labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw Domain_error{
          fmt::format("day {} has label {} outside 0..{}", i + 1, labels[i], k - 1)};
    }
  }
  auto result = Phase_trajectory{};
  result.daily_.resize(labels.size());
  for (auto i = std::size_t{0}; i != labels.size(); ++i) {
    result.daily_[i] = phase_values[labels[i]];
  }
  result.phase_values_ = std::move(phase_values);
  result.labels_ = std::move(labels);
  return result;
}

auto Phase_trajectory::from_changepoints(std::vector<double> phase_values,
                                         std::vector<int> changepoints, int horizon)
    -> Phase_trajectory {
  if (horizon < 1) {
    throw Domain_error{"horizon must be at least one day"};
  }
  if (phase_values.size() != changepoints.size() + 1) {
    throw Shape_error{fmt::format("{} phase values need {} changepoints, got {}",
                                  phase_values.size(), phase_values.size() - 1,
                                  changepoints.size())};
  }
  auto prev = 0;
  for (auto cp : changepoints) {
    if (cp <= prev || cp >= horizon) {
      throw Domain_error{fmt::format(
          "changepoints must be strictly increasing within [1, {}), got {}", horizon, cp)};
    }
    prev = cp;
  }
  auto labels = std::vector<int>(static_cast<std::size_t>(horizon));
  auto phase = 0;
  for (auto day = 1; day <= horizon; ++day) {
    while (phase < std::ssize(changepoints) && changepoints[phase] < day) {
      ++phase;
    }
    labels[day - 1] = phase;
  }
  return from_labels(std::move(phase_values), std::move(labels));
}

auto Phase_trajectory::at(int day) const -> double {
  if (day < 1 || day > horizon()) {
    throw Out_of_range_error{fmt::format("day {} outside 1..{}", day, horizon())};
  }
  return daily_[day - 1];
}

auto Phase_trajectory::occupied_phases() const -> int {
  auto used = std::vector<bool>(phase_values_.size(), false);
  auto count = 0;
  for (auto z : labels_) {
    if (!used[z]) {
      used[z] = true;
      ++count;
    }
  }
  return count;
}

auto Phase_trajectory::is_contiguous() const -> bool {
  auto seen = std::vector<bool>(phase_values_.size(), false);
  for (auto i = std::size_t{0}; i != labels_.size(); ++i) {
    if (i > 0 && labels_[i] == labels_[i - 1]) {
      continue;
    }
    if (seen[labels_[i]]) {
      return false;
    }
    seen[labels_[i]] = true;
  }
  return true;
}

auto Phase_trajectory::changepoints() const -> std::vector<int> {
  auto result = std::vector<int>{};
  for (auto i = std::size_t{1}; i < labels_.size(); ++i) {
    if (labels_[i] != labels_[i - 1]) {
      result.push_back(static_cast<int>(i));  // day i is the last day of the run
    }
  }
  return result;
}

}  // namespace rtphase
