// SPDX-License-Identifier: Apache-2.0
#include "mosae/objectives.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>

#include "mosae/error.hpp"

namespace mosae::objectives {
namespace {

std::mutex& timing_mutex() {
  static std::mutex m;
  return m;
}

double mean_path_macs(const clipping::ModelShape& shape, std::span<const std::size_t> kept,
                      const exits::ExitTrace& trace) {
  const std::size_t L = shape.depth();
  if (trace.size() == 0) throw ContractError("power_ratio: empty trace");
  // Costs depend only on the exit index, so tally samples per exit.
  std::vector<std::size_t> per_exit(L + 1, 0);
  for (auto e : trace.exit_index) {
    if (e < 1 || e > L) throw ContractError("power_ratio: exit index out of range");
    ++per_exit[e];
  }
  double total = 0.0;
  for (std::size_t e = 1; e <= L; ++e) {
    if (per_exit[e] == 0) continue;
    total += static_cast<double>(per_exit[e]) *
             static_cast<double>(path_macs(shape, kept, e, trace.evaluated_early));
  }
  return total / static_cast<double>(trace.size());
}

}  // namespace

EvalContext::EvalContext(const sae::SaeModel& m, data::Dataset evaluation,
                         const data::Dataset& calibration, std::size_t reps, double final_q)
    : model(&m),
      eval(std::move(evaluation)),
      calib(data::filter_label(calibration, 0)),
      timing_reps(reps),
      baseline_final_q(final_q) {
  if (eval.dims() != m.input_dim() || calib.dims() != m.input_dim()) {
    throw ContractError("EvalContext: dataset dimension does not match the model");
  }
}

ConfusionCounts confusion(std::span<const std::uint8_t> truth, std::span<const std::uint8_t> predicted) {
  if (truth.size() != predicted.size()) throw ContractError("confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i]) {
      (predicted[i] ? c.tp : c.fn)++;
    } else {
      (predicted[i] ? c.fp : c.tn)++;
    }
  }
  return c;
}

double f1_score(const ConfusionCounts& c) noexcept {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double storage_ratio(const sae::SaeModel& model, const clipping::ClipMask& mask) {
  const auto shape = clipping::ModelShape::of(model);
  return static_cast<double>(clipping::retained_parameters(shape, mask)) /
         static_cast<double>(model.parameter_count());
}

std::size_t path_macs(const clipping::ModelShape& shape, std::span<const std::size_t> kept,
                      std::size_t exit, std::span<const std::uint8_t> evaluated_early) {
  const std::size_t L = shape.depth();
  const std::size_t d = shape.input_dim;
  if (kept.size() != L) throw ContractError("path_macs: kept count length mismatch");
  if (exit < 1 || exit > L) throw ContractError("path_macs: exit out of range");
  if (evaluated_early.size() + 1 != L) throw ContractError("path_macs: early-exit flag length mismatch");

  std::size_t macs = 0;
  const std::size_t layers = exit;  // encoder layers on the path
  for (std::size_t k = 0; k < layers; ++k) macs += (k == 0 ? d : kept[k - 1]) * kept[k];
  for (std::size_t k = 0; k < std::min(exit, L - 1); ++k) {
    if (evaluated_early[k]) macs += kept[k] * d;
  }
  if (exit == L) {
    for (std::size_t j = 0; j < L; ++j) {
      const std::size_t in = kept[L - 1 - j];
      const std::size_t out = j + 1 == L ? d : kept[L - 2 - j];
      macs += in * out;
    }
  }
  return macs;
}

double power_ratio(const sae::SaeModel& model, const clipping::ClipMask& mask,
                   const exits::ExitTrace& trace) {
  const auto shape = clipping::ModelShape::of(model);
  mask.validate(shape);
  const auto kept = mask.kept_counts();
  const std::vector<std::uint8_t> none(shape.depth() - 1, 0);
  const double full = static_cast<double>(path_macs(shape, shape.widths, shape.depth(), none));
  return mean_path_macs(shape, kept, trace) / full;
}

double runtime_cost_ratio(const sae::SaeModel& model, const exits::ExitTrace& trace) {
  const auto shape = clipping::ModelShape::of(model);
  const std::vector<std::uint8_t> none(shape.depth() - 1, 0);
  const double full = static_cast<double>(path_macs(shape, shape.widths, shape.depth(), none));
  return mean_path_macs(shape, shape.widths, trace) / full;
}

double measure_runtime(const sae::InferenceView& view, const exits::ExitPolicy& policy,
                       const data::Dataset& d, std::size_t reps) {
  if (reps < 3 || reps % 2 == 0) throw ContractError("measure_runtime: reps must be odd and >= 3");
  std::vector<double> samples;
  samples.reserve(reps);
  std::lock_guard lock(timing_mutex());
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    auto result = exits::infer_with_exits(view, policy, d);
    const auto t1 = std::chrono::steady_clock::now();
    samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    if (result.first.size() != d.size()) throw ContractError("measure_runtime: inference failed");
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(reps / 2), samples.end());
  return samples[reps / 2];
}

ObjectiveVector evaluate_candidate(const EvalContext& ctx, const clipping::ClipMask& mask,
                                   std::span<const double> quantiles) {
  const auto& model = *ctx.model;
  const auto view = clipping::apply_mask(model, mask);
  const auto policy = exits::policy_from_errors(view.all_exit_errors(ctx.calib), quantiles,
                                                ctx.calib.name + ":" + std::to_string(ctx.calib.size()));
  const auto [labels, trace] = exits::infer_with_exits(view, policy, ctx.eval);

  ObjectiveVector v;
  v.f1 = f1_score(confusion(ctx.eval.labels, labels));
  v.storage_ratio = storage_ratio(model, mask);
  v.power_ratio = power_ratio(model, mask, trace);
  v.runtime_cost = runtime_cost_ratio(model, trace);
  v.mean_exit = trace.mean_exit_index();
  if (ctx.timing_reps > 0) v.runtime_s = measure_runtime(view, policy, ctx.eval, ctx.timing_reps);
  return v;
}

ObjectiveVector baseline(const EvalContext& ctx) {
  const auto shape = clipping::ModelShape::of(*ctx.model);
  const auto q = exits::no_exit_quantiles(shape.depth(), ctx.baseline_final_q);
  return evaluate_candidate(ctx, clipping::ClipMask::all_ones(shape), q);
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double correlation(std::span<const double> x, std::span<const double> y, CorrelationMethod method) {
  if (x.size() != y.size()) throw ContractError("correlation: length mismatch");
  if (x.size() < 3) throw ContractError("correlation: need at least 3 points");
  if (method == CorrelationMethod::spearman) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return correlation(rx, ry, CorrelationMethod::pearson);
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ContractError("correlation undefined: zero variance input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace mosae::objectives
