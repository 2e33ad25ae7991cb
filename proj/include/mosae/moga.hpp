// SPDX-License-Identifier: Apache-2.0
//
// Multi-objective genetic search over clip masks and exit quantiles.
// Selection is rank-weighted over non-dominated fronts; there is no crowding
// term.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mosae/clipping.hpp"
#include "mosae/objectives.hpp"

namespace mosae::moga {

/// Clip bits (layer-major over hidden neurons) followed by one float32 bit
/// pattern per exit, the last one being the final-exit quantile.
struct Genome {
  std::vector<std::uint8_t> clip;
  std::vector<std::uint32_t> exits;

  std::size_t bit_count() const noexcept { return clip.size() + 32 * exits.size(); }
  /// Bit i of the concatenated genome; exit patterns are MSB-first.
  bool bit(std::size_t i) const;
  void flip(std::size_t i);

  /// Clip bits packed MSB-first as hex, '.', then 8 hex digits per pattern.
  std::string hex() const;
  static Genome from_hex(const std::string& s, std::size_t clip_bits);

  bool operator==(const Genome&) const = default;
};

std::uint32_t quantile_pattern(float q) noexcept;

/// All neurons kept, early exits disabled, final exit at `final_q`.
Genome identity_genome(const clipping::ModelShape& shape, double final_q);

struct Decoded {
  clipping::ClipMask mask;
  std::vector<double> quantiles;
};

/// NaN/inf patterns repair to 0.5, others clamp to [0,1]; an all-zero layer
/// keeps its highest-index neuron.
Decoded decode_genome(const Genome& g, const clipping::ModelShape& shape);

enum class RuntimeObjective { opcount, wallclock };

using Key = std::array<double, 4>;

/// (1 - f1, runtime, storage, power), all minimized.
Key minimization_key(const objectives::ObjectiveVector& v, RuntimeObjective ro);

bool dominates(std::span<const double> a, std::span<const double> b) noexcept;
bool dominates(const objectives::ObjectiveVector& a, const objectives::ObjectiveVector& b,
               RuntimeObjective ro = RuntimeObjective::wallclock);

struct FrontSet {
  std::vector<std::vector<std::size_t>> fronts;  // F_1..F_k, indices ascending
  std::vector<std::size_t> rank;                 // 1-based front of each individual

  std::size_t size() const noexcept { return rank.size(); }
};

/// Points may have any common dimension.
FrontSet fast_nondominated_sort(const std::vector<std::vector<double>>& points);
FrontSet fast_nondominated_sort(const std::vector<Key>& keys);

/// A member of front i gets (1/i) / sum_j (count_j / j).
std::vector<double> selection_probabilities(const FrontSet& fs);

struct GaConfig {
  std::size_t population = 40;
  std::size_t generations = 30;
  double crossover_rate = 0.9;
  double mutation_rate = -1.0;  // negative: 1 / genome length
  std::size_t elitism = 2;
  std::uint64_t seed = 1;
  RuntimeObjective runtime = RuntimeObjective::opcount;

  void validate() const;
  double mutation_for(std::size_t genome_bits) const noexcept;
};

/// One generation: sort, roulette-select parent pairs, segment-wise
/// single-point crossover, per-bit mutation, elites copied unchanged.
std::vector<Genome> evolve_step(const std::vector<Genome>& pop, const std::vector<Key>& keys,
                                const GaConfig& cfg, std::mt19937_64& rng);

enum class Mode { clip_only, exit_only, joint };

Mode parse_mode(const std::string& s);
std::string mode_name(Mode m);

struct ArchiveEntry {
  std::size_t generation = 0;
  Genome genome;
  objectives::ObjectiveVector objectives;
  std::size_t rank = 0;  // front over the whole archive
};

struct OptimizerResult {
  FrontSet archive_fronts;
  std::vector<ArchiveEntry> archive;  // unique genomes in first-evaluation order
  objectives::ObjectiveVector baseline;

  std::vector<std::size_t> front() const { return archive_fronts.fronts.front(); }
};

/// In clip-only mode the early-exit patterns stay at 0 (disabled); in
/// exit-only mode every clip bit stays 1. The final-exit quantile evolves in
/// every mode. The returned front is taken over every evaluated genome.
OptimizerResult run_optimizer(const objectives::EvalContext& ctx, const GaConfig& cfg, Mode mode);

/// Uniform double in [0,1) from the top 53 bits.
inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace mosae::moga
