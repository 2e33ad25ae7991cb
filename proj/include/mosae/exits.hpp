// SPDX-License-Identifier: Apache-2.0
//
// Multi-branch early-exit inference. Early exits only ever emit NORMAL: a
// sample leaves at the first exit whose reconstruction error is within that
// exit's threshold; anomaly verdicts come from the final exit alone.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mosae/data.hpp"
#include "mosae/sae.hpp"

namespace mosae::exits {

/// Threshold of an early exit that never fires (quantile 0).
inline constexpr double kDisabledThreshold = -1.0;

struct ExitPolicy {
  std::vector<double> quantiles;   // one per exit 1..L
  std::vector<double> thresholds;  // absolute errors; kDisabledThreshold for a disabled early exit
  std::string calibration_id;

  std::size_t depth() const noexcept { return thresholds.size(); }
  bool early_exit_enabled(std::size_t k) const noexcept { return thresholds[k] >= 0.0; }
};

struct ExitTrace {
  std::vector<std::uint32_t> exit_index;  // 1-based
  std::vector<std::uint8_t> verdict;      // 1 = anomaly
  std::vector<double> error;              // error at the exit taken
  std::vector<std::uint8_t> evaluated_early;  // per early exit 1..L-1: head computed for samples passing it

  std::size_t size() const noexcept { return exit_index.size(); }
  double mean_exit_index() const noexcept;
};

/// tau_k = nearest-rank quantile q_k of exit-k errors over the normal rows of
/// `calib`. An early-exit q_k of 0 disables that exit.
ExitPolicy calibrate_exit_thresholds(const sae::InferenceView& view, const data::Dataset& calib,
                                     std::span<const double> quantiles);

/// Same, from precomputed per-exit errors of the calibration normals.
ExitPolicy policy_from_errors(const std::vector<Vector>& exit_errors,
                              std::span<const double> quantiles, std::string calibration_id);

std::pair<std::vector<std::uint8_t>, ExitTrace> infer_with_exits(const sae::InferenceView& view,
                                                                 const ExitPolicy& policy,
                                                                 const data::Dataset& d);

/// Quantiles drawn uniformly from [0,1] per exit (final included), then calibrated.
ExitPolicy rret_policy(const sae::InferenceView& view, const data::Dataset& calib,
                       std::uint64_t seed);

/// Quantile list with every early exit disabled and the given final quantile.
std::vector<double> no_exit_quantiles(std::size_t depth, double final_q);

}  // namespace mosae::exits
