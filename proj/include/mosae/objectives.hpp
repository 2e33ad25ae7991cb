// SPDX-License-Identifier: Apache-2.0
//
// The four optimization objectives (F1, runtime, storage, power) for one
// candidate (clip mask + exit quantiles), and the correlation statistics used
// to study trade-offs between them.
//
// Storage and power are relative to the unclipped model running without
// early exits. Power is a multiply-accumulate count along each sample's
// actual exit path, excluding terms that touch a pruned neuron.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mosae/clipping.hpp"
#include "mosae/data.hpp"
#include "mosae/exits.hpp"
#include "mosae/sae.hpp"

namespace mosae::objectives {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted);

/// 2 tp / (2 tp + fp + fn), 0 when the denominator is 0.
double f1_score(const ConfusionCounts& c) noexcept;

struct ObjectiveVector {
  double f1 = 0.0;
  double runtime_s = 0.0;      // median wall-clock of a full evaluation pass; 0 when not measured
  double storage_ratio = 1.0;
  double power_ratio = 1.0;
  // Deterministic runtime estimate: MACs the inference actually executes
  // (gated neurons still cost time) relative to the no-exit full pass.
  double runtime_cost = 1.0;
  double mean_exit = 0.0;

  bool operator==(const ObjectiveVector&) const = default;
};

struct EvalContext {
  const sae::SaeModel* model = nullptr;  // frozen; must outlive the context
  data::Dataset eval;
  data::Dataset calib;     // normal rows used for threshold calibration
  std::size_t timing_reps = 3;  // 0 skips wall-clock timing
  double baseline_final_q = 0.95;

  /// Keeps only the normal rows of `calibration`.
  EvalContext(const sae::SaeModel& m, data::Dataset evaluation, const data::Dataset& calibration,
              std::size_t reps = 3, double final_q = 0.95);
};

double storage_ratio(const sae::SaeModel& model, const clipping::ClipMask& mask);

/// MACs for one sample leaving at 1-based `exit`, with per-layer kept counts.
std::size_t path_macs(const clipping::ModelShape& shape, std::span<const std::size_t> kept,
                      std::size_t exit, std::span<const std::uint8_t> evaluated_early);

double power_ratio(const sae::SaeModel& model, const clipping::ClipMask& mask,
                   const exits::ExitTrace& trace);

/// Executed-MAC ratio ignoring the mask (gating does not skip work).
double runtime_cost_ratio(const sae::SaeModel& model, const exits::ExitTrace& trace);

/// Median wall-clock seconds of `reps` (odd, >= 3) sequential inference passes.
/// Timed sections from different threads never overlap.
double measure_runtime(const sae::InferenceView& view, const exits::ExitPolicy& policy,
                       const data::Dataset& d, std::size_t reps);

/// quantiles: one per exit, early exits first; 0 disables an early exit.
ObjectiveVector evaluate_candidate(const EvalContext& ctx, const clipping::ClipMask& mask,
                                   std::span<const double> quantiles);

/// F1 of the unclipped model with exits disabled at ctx.baseline_final_q.
ObjectiveVector baseline(const EvalContext& ctx);

enum class CorrelationMethod { pearson, spearman };

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> x);

/// Throws ContractError for lengths < 3, mismatched lengths or zero variance.
double correlation(std::span<const double> x, std::span<const double> y, CorrelationMethod method);

}  // namespace mosae::objectives
