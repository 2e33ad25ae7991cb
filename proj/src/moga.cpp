// SPDX-License-Identifier: Apache-2.0
#include "mosae/moga.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "mosae/error.hpp"

namespace mosae::moga {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t generation, std::uint64_t index) {
  return splitmix(splitmix(splitmix(seed) ^ generation) ^ index);
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n)));
}

std::size_t roulette(std::mt19937_64& rng, std::span<const double> cumulative) {
  const double u = unit(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

void check_shape(const Genome& g, const clipping::ModelShape& shape) {
  if (g.clip.size() != shape.hidden_neurons() || g.exits.size() != shape.depth()) {
    throw ContractError("genome length does not match the model shape");
  }
}

constexpr char kHex[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  throw ContractError(std::string("genome hex: bad digit '") + c + "'");
}

}  // namespace

bool Genome::bit(std::size_t i) const {
  if (i < clip.size()) return clip[i] != 0;
  i -= clip.size();
  if (i >= 32 * exits.size()) throw ContractError("Genome::bit: index out of range");
  return (exits[i / 32] >> (31 - i % 32)) & 1U;
}

void Genome::flip(std::size_t i) {
  if (i < clip.size()) {
    clip[i] ^= 1;
    return;
  }
  i -= clip.size();
  if (i >= 32 * exits.size()) throw ContractError("Genome::flip: index out of range");
  exits[i / 32] ^= 1U << (31 - i % 32);
}

std::string Genome::hex() const {
  std::string s;
  for (std::size_t i = 0; i < clip.size(); i += 4) {
    unsigned nib = 0;
    for (std::size_t j = 0; j < 4; ++j) nib = (nib << 1) | (i + j < clip.size() && clip[i + j] ? 1U : 0U);
    s += kHex[nib];
  }
  s += '.';
  for (auto p : exits) {
    for (int sh = 28; sh >= 0; sh -= 4) s += kHex[(p >> sh) & 0xF];
  }
  return s;
}

Genome Genome::from_hex(const std::string& s, std::size_t clip_bits) {
  const auto dot = s.find('.');
  if (dot == std::string::npos) throw ContractError("genome hex: missing '.'");
  const std::string c = s.substr(0, dot);
  const std::string e = s.substr(dot + 1);
  if (c.size() != (clip_bits + 3) / 4 || e.size() % 8 != 0) throw ContractError("genome hex: length mismatch");
  Genome g;
  for (std::size_t i = 0; i < clip_bits; ++i) {
    const int nib = hex_value(c[i / 4]);
    g.clip.push_back(static_cast<std::uint8_t>((nib >> (3 - i % 4)) & 1));
  }
  for (std::size_t k = 0; k < e.size(); k += 8) {
    std::uint32_t p = 0;
    for (std::size_t j = 0; j < 8; ++j) p = (p << 4) | static_cast<std::uint32_t>(hex_value(e[k + j]));
    g.exits.push_back(p);
  }
  return g;
}

std::uint32_t quantile_pattern(float q) noexcept { return std::bit_cast<std::uint32_t>(q); }

Genome identity_genome(const clipping::ModelShape& shape, double final_q) {
  Genome g;
  g.clip.assign(shape.hidden_neurons(), 1);
  g.exits.assign(shape.depth(), quantile_pattern(0.0f));
  g.exits.back() = quantile_pattern(static_cast<float>(final_q));
  return g;
}

Decoded decode_genome(const Genome& g, const clipping::ModelShape& shape) {
  check_shape(g, shape);
  Decoded out;
  std::size_t pos = 0;
  for (auto w : shape.widths) {
    std::vector<std::uint8_t> layer(g.clip.begin() + static_cast<std::ptrdiff_t>(pos),
                                    g.clip.begin() + static_cast<std::ptrdiff_t>(pos + w));
    for (auto& b : layer) b = b ? 1 : 0;
    if (std::find(layer.begin(), layer.end(), 1) == layer.end()) layer.back() = 1;
    out.mask.keep.push_back(std::move(layer));
    pos += w;
  }
  for (auto p : g.exits) {
    const float f = std::bit_cast<float>(p);
    out.quantiles.push_back(std::isfinite(f) ? std::clamp(static_cast<double>(f), 0.0, 1.0) : 0.5);
  }
  return out;
}

Key minimization_key(const objectives::ObjectiveVector& v, RuntimeObjective ro) {
  return {1.0 - v.f1, ro == RuntimeObjective::opcount ? v.runtime_cost : v.runtime_s, v.storage_ratio,
          v.power_ratio};
}

bool dominates(std::span<const double> a, std::span<const double> b) noexcept {
  bool strict = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

bool dominates(const objectives::ObjectiveVector& a, const objectives::ObjectiveVector& b,
               RuntimeObjective ro) {
  const auto ka = minimization_key(a, ro);
  const auto kb = minimization_key(b, ro);
  return dominates(std::span<const double>(ka), std::span<const double>(kb));
}

FrontSet fast_nondominated_sort(const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  if (n == 0) throw ContractError("fast_nondominated_sort: empty population");
  for (const auto& p : points) {
    if (p.size() != points[0].size()) throw ContractError("fast_nondominated_sort: ragged objectives");
    for (double v : p) {
      if (!std::isfinite(v)) throw ContractError("fast_nondominated_sort: non-finite objective");
    }
  }

  std::vector<std::vector<std::size_t>> dominated(n);  // S_p
  std::vector<std::size_t> count(n, 0);                 // n_p
  FrontSet fs;
  fs.rank.assign(n, 0);
  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < n; ++q) {
      if (p == q) continue;
      if (dominates(points[p], points[q])) {
        dominated[p].push_back(q);
      } else if (dominates(points[q], points[p])) {
        ++count[p];
      }
    }
    if (count[p] == 0) {
      fs.rank[p] = 1;
      current.push_back(p);
    }
  }

  while (!current.empty()) {
    const std::size_t i = fs.fronts.size() + 1;
    std::vector<std::size_t> next;
    for (auto p : current) {
      for (auto q : dominated[p]) {
        if (--count[q] == 0) {
          fs.rank[q] = i + 1;
          next.push_back(q);
        }
      }
    }
    fs.fronts.push_back(std::move(current));
    std::sort(next.begin(), next.end());
    current = std::move(next);
  }
  return fs;
}

FrontSet fast_nondominated_sort(const std::vector<Key>& keys) {
  std::vector<std::vector<double>> pts;
  pts.reserve(keys.size());
  for (const auto& k : keys) pts.emplace_back(k.begin(), k.end());
  return fast_nondominated_sort(pts);
}

std::vector<double> selection_probabilities(const FrontSet& fs) {
  if (fs.fronts.empty()) throw ContractError("selection_probabilities: no fronts");
  double denom = 0.0;
  for (std::size_t i = 0; i < fs.fronts.size(); ++i) {
    denom += static_cast<double>(fs.fronts[i].size()) / static_cast<double>(i + 1);
  }
  std::vector<double> p(fs.size());
  for (std::size_t j = 0; j < fs.size(); ++j) p[j] = (1.0 / static_cast<double>(fs.rank[j])) / denom;
  return p;
}

void GaConfig::validate() const {
  if (population < 4 || population % 2 != 0) throw ContractError("GaConfig: population must be even and >= 4");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ContractError("GaConfig: crossover rate outside [0,1]");
  if (!(mutation_rate <= 1.0)) {
    throw ContractError("GaConfig: mutation rate outside [0,1]");
  }
  if (elitism > population) throw ContractError("GaConfig: elitism exceeds population");
}

double GaConfig::mutation_for(std::size_t genome_bits) const noexcept {
  return mutation_rate >= 0.0 ? mutation_rate : 1.0 / static_cast<double>(genome_bits);
}

std::vector<Genome> evolve_step(const std::vector<Genome>& pop, const std::vector<Key>& keys,
                                const GaConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  if (pop.size() != cfg.population || keys.size() != pop.size()) {
    throw ContractError("evolve_step: population size does not match the config");
  }
  const std::size_t clip_bits = pop[0].clip.size();
  const std::size_t patterns = pop[0].exits.size();
  for (const auto& g : pop) {
    if (g.clip.size() != clip_bits || g.exits.size() != patterns) throw ContractError("evolve_step: ragged genomes");
  }

  const auto fs = fast_nondominated_sort(keys);
  const auto prob = selection_probabilities(fs);
  std::vector<double> cumulative(prob.size());
  std::partial_sum(prob.begin(), prob.end(), cumulative.begin());

  std::vector<std::size_t> order(pop.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fs.rank[a] < fs.rank[b]; });

  std::vector<Genome> next;
  next.reserve(pop.size());
  for (std::size_t i = 0; i < cfg.elitism; ++i) next.push_back(pop[order[i]]);

  const double mut = cfg.mutation_for(pop[0].bit_count());
  const std::size_t exit_bits = 32 * patterns;
  while (next.size() < pop.size()) {
    Genome a = pop[roulette(rng, cumulative)];
    Genome b = pop[roulette(rng, cumulative)];
    if (clip_bits > 1 && unit(rng) < cfg.crossover_rate) {
      const std::size_t cut = 1 + uniform_index(rng, clip_bits - 1);
      std::swap_ranges(a.clip.begin() + static_cast<std::ptrdiff_t>(cut), a.clip.end(),
                       b.clip.begin() + static_cast<std::ptrdiff_t>(cut));
    }
    if (exit_bits > 1 && unit(rng) < cfg.crossover_rate) {
      const std::size_t cut = 1 + uniform_index(rng, exit_bits - 1);
      for (std::size_t i = cut; i < exit_bits; ++i) {
        if (a.bit(clip_bits + i) != b.bit(clip_bits + i)) {
          a.flip(clip_bits + i);
          b.flip(clip_bits + i);
        }
      }
    }
    for (Genome* g : {&a, &b}) {
      for (std::size_t i = 0; i < g->bit_count(); ++i) {
        if (unit(rng) < mut) g->flip(i);
      }
    }
    next.push_back(std::move(a));
    if (next.size() < pop.size()) next.push_back(std::move(b));
  }
  return next;
}

Mode parse_mode(const std::string& s) {
  if (s == "clip" || s == "clip-only" || s == "clip_only") return Mode::clip_only;
  if (s == "exit" || s == "exit-only" || s == "exit_only") return Mode::exit_only;
  if (s == "joint") return Mode::joint;
  throw ContractError("unknown mode '" + s + "' (expected clip, exit or joint)");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::clip_only: return "clip";
    case Mode::exit_only: return "exit";
    case Mode::joint: return "joint";
  }
  return "joint";
}

namespace {

void freeze(Genome& g, Mode mode) {
  if (mode == Mode::clip_only) {
    for (std::size_t k = 0; k + 1 < g.exits.size(); ++k) g.exits[k] = quantile_pattern(0.0f);
  } else if (mode == Mode::exit_only) {
    std::fill(g.clip.begin(), g.clip.end(), std::uint8_t{1});
  }
}

Genome random_genome(const clipping::ModelShape& shape, Mode mode, std::mt19937_64& rng) {
  Genome g;
  const double keep_p = 0.4 + 0.6 * unit(rng);
  for (std::size_t i = 0; i < shape.hidden_neurons(); ++i) g.clip.push_back(unit(rng) < keep_p ? 1 : 0);
  for (std::size_t k = 0; k + 1 < shape.depth(); ++k) {
    const double q = unit(rng) < 0.25 ? 0.0 : unit(rng);
    g.exits.push_back(quantile_pattern(static_cast<float>(q)));
  }
  g.exits.push_back(quantile_pattern(static_cast<float>(0.8 + 0.2 * unit(rng))));
  freeze(g, mode);
  return g;
}

}  // namespace

OptimizerResult run_optimizer(const objectives::EvalContext& ctx, const GaConfig& cfg, Mode mode) {
  cfg.validate();
  if (ctx.model == nullptr) throw ContractError("run_optimizer: context has no model");
  if (cfg.runtime == RuntimeObjective::wallclock && ctx.timing_reps == 0) {
    throw ContractError("run_optimizer: wall-clock runtime objective needs timing repetitions");
  }
  const auto shape = clipping::ModelShape::of(*ctx.model);

  OptimizerResult res;
  res.baseline = objectives::baseline(ctx);
  std::unordered_map<std::string, std::size_t> seen;

  auto evaluate = [&](const std::vector<Genome>& pop, std::size_t generation) {
    std::vector<Key> keys;
    keys.reserve(pop.size());
    for (const auto& g : pop) {
      const auto hex = g.hex();
      auto it = seen.find(hex);
      if (it == seen.end()) {
        const auto dec = decode_genome(g, shape);
        ArchiveEntry e{generation, g, objectives::evaluate_candidate(ctx, dec.mask, dec.quantiles), 0};
        it = seen.emplace(hex, res.archive.size()).first;
        res.archive.push_back(std::move(e));
      }
      keys.push_back(minimization_key(res.archive[it->second].objectives, cfg.runtime));
    }
    return keys;
  };

  std::vector<Genome> pop;
  pop.push_back(identity_genome(shape, ctx.baseline_final_q));
  freeze(pop.back(), mode);
  for (std::size_t i = 1; i < cfg.population; ++i) {
    std::mt19937_64 rng(stream_seed(cfg.seed, 0, i));
    pop.push_back(random_genome(shape, mode, rng));
  }
  auto keys = evaluate(pop, 0);

  for (std::size_t gen = 1; gen <= cfg.generations; ++gen) {
    std::mt19937_64 rng(stream_seed(cfg.seed, gen, 0));
    pop = evolve_step(pop, keys, cfg, rng);
    for (auto& g : pop) freeze(g, mode);
    keys = evaluate(pop, gen);
  }

  std::vector<Key> all;
  all.reserve(res.archive.size());
  for (const auto& e : res.archive) all.push_back(minimization_key(e.objectives, cfg.runtime));
  res.archive_fronts = fast_nondominated_sort(all);
  for (std::size_t i = 0; i < res.archive.size(); ++i) res.archive[i].rank = res.archive_fronts.rank[i];
  return res;
}

}  // namespace mosae::moga
