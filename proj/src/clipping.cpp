// SPDX-License-Identifier: Apache-2.0
#include "mosae/clipping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mosae/error.hpp"

namespace mosae::clipping {
namespace {

std::size_t ceil_count(double frac, std::size_t width) {
  const double x = frac * static_cast<double>(width);
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
}

}  // namespace

ModelShape ModelShape::of(const sae::SaeModel& m) {
  return ModelShape{m.input_dim(), m.config.encoder_widths};
}

std::size_t ModelShape::hidden_neurons() const noexcept {
  return std::accumulate(widths.begin(), widths.end(), std::size_t{0});
}

ClipMask ClipMask::all_ones(const ModelShape& shape) {
  ClipMask m;
  for (auto w : shape.widths) m.keep.emplace_back(w, std::uint8_t{1});
  return m;
}

std::size_t ClipMask::kept(std::size_t layer) const noexcept {
  return static_cast<std::size_t>(std::count(keep[layer].begin(), keep[layer].end(), std::uint8_t{1}));
}

std::size_t ClipMask::pruned_total() const noexcept {
  std::size_t n = 0;
  for (std::size_t k = 0; k < keep.size(); ++k) n += keep[k].size() - kept(k);
  return n;
}

std::vector<std::size_t> ClipMask::kept_counts() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < keep.size(); ++k) out.push_back(kept(k));
  return out;
}

bool ClipMask::prunes_superset_of(const ClipMask& other) const {
  if (keep.size() != other.keep.size()) return false;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k].size() != other.keep[k].size()) return false;
    for (std::size_t i = 0; i < keep[k].size(); ++i) {
      if (!other.keep[k][i] && keep[k][i]) return false;
    }
  }
  return true;
}

void ClipMask::validate(const ModelShape& shape) const {
  if (keep.size() != shape.widths.size()) throw ContractError("ClipMask: layer count mismatch");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k].size() != shape.widths[k]) throw ContractError("ClipMask: layer width mismatch");
    if (kept(k) == 0) throw ContractError("ClipMask: layer " + std::to_string(k + 1) + " has no kept neuron");
  }
}

ClipMask sample_mask(const ModelShape& shape, double keep_frac, std::uint64_t seed) {
  if (!(keep_frac > 0.0 && keep_frac <= 1.0)) {
    throw ContractError("sample_mask: keep_frac must lie in (0,1]");
  }
  std::mt19937_64 rng(seed);
  ClipMask m;
  for (auto w : shape.widths) {
    const std::size_t n_keep = std::clamp<std::size_t>(ceil_count(keep_frac, w), 1, w);
    std::vector<std::size_t> idx(w);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::uint8_t> layer(w, 0);
    for (std::size_t i = 0; i < n_keep; ++i) layer[idx[i]] = 1;
    m.keep.push_back(std::move(layer));
  }
  return m;
}

ClipSchedule progressive_schedule(const ModelShape& shape, double step_frac, std::uint64_t seed) {
  if (!(step_frac > 0.0 && step_frac <= 0.5)) {
    throw ContractError("progressive_schedule: step_frac must lie in (0, 0.5]");
  }
  std::mt19937_64 rng(seed);
  ClipSchedule sched{{}, step_frac, seed};
  ClipMask cur = ClipMask::all_ones(shape);
  std::vector<std::size_t> per_round;
  for (auto w : shape.widths) per_round.push_back(std::max<std::size_t>(1, ceil_count(step_frac, w)));

  for (;;) {
    for (std::size_t k = 0; k < shape.widths.size(); ++k) {
      if (cur.kept(k) <= per_round[k]) return sched;
    }
    for (std::size_t k = 0; k < shape.widths.size(); ++k) {
      std::vector<std::size_t> alive;
      for (std::size_t i = 0; i < cur.keep[k].size(); ++i) {
        if (cur.keep[k][i]) alive.push_back(i);
      }
      std::shuffle(alive.begin(), alive.end(), rng);
      for (std::size_t i = 0; i < per_round[k]; ++i) cur.keep[k][alive[i]] = 0;
    }
    sched.masks.push_back(cur);
  }
}

sae::InferenceView apply_mask(const sae::SaeModel& model, const ClipMask& mask) {
  mask.validate(ModelShape::of(model));
  std::vector<std::vector<double>> gates;
  for (const auto& layer : mask.keep) {
    std::vector<double> g(layer.size());
    for (std::size_t i = 0; i < layer.size(); ++i) g[i] = layer[i] ? 1.0 : 0.0;
    gates.push_back(std::move(g));
  }
  return sae::InferenceView(model, std::move(gates));
}

std::size_t retained_parameters(const ModelShape& shape, const ClipMask& mask) {
  mask.validate(shape);
  const std::size_t L = shape.depth();
  const std::size_t d = shape.input_dim;
  const auto kept = mask.kept_counts();
  std::size_t n = 0;
  for (std::size_t k = 0; k < L; ++k) {
    const std::size_t in = k == 0 ? d : kept[k - 1];
    n += in * kept[k] + kept[k];
  }
  for (std::size_t j = 0; j < L; ++j) {
    const std::size_t in = kept[L - 1 - j];
    const std::size_t out = j + 1 == L ? d : kept[L - 2 - j];
    n += in * out + out;
  }
  for (std::size_t k = 0; k + 1 < L; ++k) n += kept[k] * d + d;
  return n;
}

}  // namespace mosae::clipping
