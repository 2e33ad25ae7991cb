// SPDX-License-Identifier: Apache-2.0
//
// Neuron-level clip masks over the encoder's hidden layers, applied to a
// frozen model by zero-forcing activations (no retraining), and the
// progressive clipping test that sweeps from mild to extreme pruning.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mosae/sae.hpp"

namespace mosae::clipping {

struct ModelShape {
  std::size_t input_dim = 0;
  std::vector<std::size_t> widths;

  static ModelShape of(const sae::SaeModel& m);
  std::size_t depth() const noexcept { return widths.size(); }
  std::size_t hidden_neurons() const noexcept;
  bool operator==(const ModelShape&) const = default;
};

/// keep[k][i] = 1 keeps neuron i of encoder layer k (and its decoder mirror).
struct ClipMask {
  std::vector<std::vector<std::uint8_t>> keep;

  static ClipMask all_ones(const ModelShape& shape);

  std::size_t kept(std::size_t layer) const noexcept;
  std::size_t pruned_total() const noexcept;
  std::vector<std::size_t> kept_counts() const;
  /// Every neuron pruned by `other` is pruned here too.
  bool prunes_superset_of(const ClipMask& other) const;
  /// Throws ContractError on a shape mismatch or an empty layer.
  void validate(const ModelShape& shape) const;

  bool operator==(const ClipMask&) const = default;
};

struct ClipSchedule {
  std::vector<ClipMask> masks;
  double step_frac = 0.05;
  std::uint64_t seed = 0;
};

/// Keeps ceil(keep_frac * width) uniformly sampled neurons per layer.
ClipMask sample_mask(const ModelShape& shape, double keep_frac, std::uint64_t seed);

/// Each round prunes ceil(step_frac * width) more still-kept neurons per
/// layer, emitting the cumulative mask, and stops before any layer would be
/// left with no kept neuron.
ClipSchedule progressive_schedule(const ModelShape& shape, double step_frac, std::uint64_t seed);

/// Read-only view with pruned activations forced to zero on every path.
sae::InferenceView apply_mask(const sae::SaeModel& model, const ClipMask& mask);

/// Parameters surviving the mask: a weight survives iff both neurons it
/// connects are kept, a bias iff its neuron is kept. Input and output
/// neurons are always kept.
std::size_t retained_parameters(const ModelShape& shape, const ClipMask& mask);

}  // namespace mosae::clipping
