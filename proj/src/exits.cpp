// SPDX-License-Identifier: Apache-2.0
#include "mosae/exits.hpp"

#include <random>

#include "mosae/error.hpp"

namespace mosae::exits {

double ExitTrace::mean_exit_index() const noexcept {
  if (exit_index.empty()) return 0.0;
  double s = 0.0;
  for (auto e : exit_index) s += e;
  return s / static_cast<double>(exit_index.size());
}

ExitPolicy policy_from_errors(const std::vector<Vector>& exit_errors,
                              std::span<const double> quantiles, std::string calibration_id) {
  const std::size_t L = exit_errors.size();
  if (quantiles.size() != L) throw ContractError("exit policy: need one quantile per exit");
  ExitPolicy p{{quantiles.begin(), quantiles.end()}, std::vector<double>(L), std::move(calibration_id)};
  for (std::size_t k = 0; k < L; ++k) {
    const double q = quantiles[k];
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("exit policy: quantile outside [0,1]");
    if (exit_errors[k].size() == 0) throw ContractError("exit policy: empty calibration set");
    if (k + 1 < L && q == 0.0) {
      p.thresholds[k] = kDisabledThreshold;
    } else {
      p.thresholds[k] = sae::nearest_rank_quantile(exit_errors[k].span(), q);
    }
  }
  return p;
}

ExitPolicy calibrate_exit_thresholds(const sae::InferenceView& view, const data::Dataset& calib,
                                     std::span<const double> quantiles) {
  if (quantiles.size() != view.depth()) throw ContractError("calibrate_exit_thresholds: need one quantile per exit");
  if (calib.size() == 0) throw ContractError("calibrate_exit_thresholds: empty calibration set");
  std::vector<std::size_t> normal_rows;
  for (std::size_t r = 0; r < calib.size(); ++r) {
    if (calib.labels[r] == 0) normal_rows.push_back(r);
  }
  if (normal_rows.empty()) throw ContractError("calibrate_exit_thresholds: no normal rows to calibrate on");
  const auto normals = normal_rows.size() == calib.size() ? calib : data::select_rows(calib, normal_rows);
  return policy_from_errors(view.all_exit_errors(normals), quantiles,
                            calib.name + ":" + std::to_string(normals.size()));
}

std::pair<std::vector<std::uint8_t>, ExitTrace> infer_with_exits(const sae::InferenceView& view,
                                                                 const ExitPolicy& policy,
                                                                 const data::Dataset& d) {
  const std::size_t L = view.depth();
  if (policy.depth() != L) throw ContractError("infer_with_exits: policy depth mismatch");
  if (d.dims() != view.input_dim()) throw ContractError("infer_with_exits: dimension mismatch");

  const std::size_t n = d.size();
  ExitTrace trace;
  trace.exit_index.resize(n);
  trace.verdict.resize(n);
  trace.error.resize(n);
  for (std::size_t k = 0; k + 1 < L; ++k) trace.evaluated_early.push_back(policy.early_exit_enabled(k));

  auto ws = view.make_workspace();
  const double final_tau = policy.thresholds[L - 1];
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = d.features.row(r);
    bool done = false;
    for (std::size_t k = 0; k < L; ++k) {
      view.encode_layer(ws, x, k);
      if (k + 1 < L && policy.thresholds[k] >= 0.0) {
        const double e = view.head_error(ws, x, k);
        if (e <= policy.thresholds[k]) {
          trace.exit_index[r] = static_cast<std::uint32_t>(k + 1);
          trace.verdict[r] = 0;
          trace.error[r] = e;
          done = true;
          break;
        }
      }
    }
    if (done) continue;
    const double e = view.final_error(ws, x);
    trace.exit_index[r] = static_cast<std::uint32_t>(L);
    trace.verdict[r] = e > final_tau ? 1 : 0;
    trace.error[r] = e;
  }
  auto labels = trace.verdict;
  return {std::move(labels), std::move(trace)};
}

ExitPolicy rret_policy(const sae::InferenceView& view, const data::Dataset& calib,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> q(view.depth());
  for (double& v : q) v = u(rng);
  return calibrate_exit_thresholds(view, calib, q);
}

std::vector<double> no_exit_quantiles(std::size_t depth, double final_q) {
  std::vector<double> q(depth, 0.0);
  q.back() = final_q;
  return q;
}

}  // namespace mosae::exits
