#pragma once

#include <string>
#include <vector>

#include "rtphase/posterior.hpp"

namespace rtphase {

// Rank-normalised split-R-hat. Chains are truncated to the shortest (at least 8 draws); a sample that is
// constant across all chains gives exactly 1.
auto split_rhat(const std::vector<std::vector<double>>& chains) -> double;

// Bulk effective sample size: rank-normalised split chains, Geyer's initial monotone
// sequence estimator. NaN for a constant sample.
auto ess_bulk(const std::vector<std::vector<double>>& chains) -> double;

struct Scalar_diagnostic {
  std::string name;
  double rhat = 1.0;
  double ess = 0.0;
  bool flagged = false;
};

struct Diagnostics_report {
  double rhat_threshold = 1.05;
  std::vector<Scalar_diagnostic> scalars;
  std::vector<double> acceptance;  // per chain
  auto any_flagged() const -> bool;
  auto flagged_names() const -> std::vector<std::string>;
};

// Needs at least 2 chains with at least 100 draws each.
auto diagnostics(const Posterior_draws& draws, double rhat_threshold = 1.05)
    -> Diagnostics_report;

}  // namespace rtphase
