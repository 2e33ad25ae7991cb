// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run: one PASS/FAIL line per criterion, exit code 1
// if any criterion fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "golden.hpp"
#include "mosae/binpack.hpp"
#include "mosae/cli.hpp"
#include "mosae/clipping.hpp"
#include "mosae/exits.hpp"
#include "mosae/moga.hpp"
#include "mosae/objectives.hpp"
#include "oracles.hpp"

using namespace mosae;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and budgets.
constexpr std::size_t kSortPopulations = 100;
constexpr std::size_t kSortMaxN = 200;
constexpr double kSortSeconds = 10.0;
constexpr double kProbSumTol = 1e-12;
constexpr std::size_t kCodecMatrices = 1000;
constexpr double kRateLo = 0.10, kRateHi = 0.12;
constexpr double kBoundSlack = 1e-9;
constexpr double kGradTol = 1e-4;
constexpr double kClipTol = 1e-12;
constexpr double kPearsonMin = 0.9;
constexpr double kSweepF1Tol = 0.02;
constexpr std::uint32_t kSweepMinDensity = 256;
constexpr double kSweepRuntimeSpread = 0.20;
constexpr std::size_t kSweepTimingReps = 7;
constexpr double kMaxF1Drop = 0.05, kMaxStorage = 0.6, kMaxPower = 0.6;
constexpr double kOptimizeSeconds = 15 * 60;
constexpr int kSpeedTrials = 10, kSpeedWins = 8;
constexpr std::size_t kSpeedReps = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

nlohmann::json json_of(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

// The default desk-scale fixture, trained once and shared.
const cli::RunConfig& fixture() {
  static const cli::RunConfig cfg = [] {
    auto c = cli::default_config();
    c.out = oracle::temp_dir("acceptance_fixture");
    cli::cmd_train(c);
    return c;
  }();
  return cfg;
}

Outcome sort_correctness() {
  std::mt19937_64 rng(101);
  double sort_s = 0;
  std::size_t mismatches = 0, largest = 0;
  for (std::size_t t = 0; t < kSortPopulations; ++t) {
    const std::size_t n = t == 0 ? kSortMaxN : 1 + rng() % kSortMaxN;
    largest = std::max(largest, n);
    std::vector<std::vector<double>> pts(n, std::vector<double>(4));
    const bool coarse = t % 2 == 0;  // coarse grids force ties and duplicates
    for (auto& p : pts)
      for (auto& v : p) v = coarse ? static_cast<double>(rng() % 6) : moga::unit(rng);
    const auto t0 = Clock::now();
    const auto fs = moga::fast_nondominated_sort(pts);
    sort_s += seconds_since(t0);
    const auto want = oracle::layered_peeling(pts);
    if (fs.fronts != want) ++mismatches;
    for (std::size_t f = 0; f < want.size(); ++f)
      for (auto i : want[f])
        if (fs.rank[i] != f + 1) ++mismatches;
  }
  return {mismatches == 0 && sort_s < kSortSeconds,
          fmt("%zu populations up to n=%zu, %zu mismatches, sort time %.3f s", kSortPopulations, largest, mismatches,
              sort_s)};
}

Outcome selection_suite() {
  std::mt19937_64 rng(202);
  double worst_sum = 0;
  bool uniform = true, decreasing = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::vector<double>> pts(2 + rng() % 60, std::vector<double>(3));
    for (auto& p : pts)
      for (auto& v : p) v = static_cast<double>(rng() % 5);
    const auto fs = moga::fast_nondominated_sort(pts);
    const auto p = moga::selection_probabilities(fs);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    for (std::size_t f = 0; f < fs.fronts.size(); ++f) {
      for (auto i : fs.fronts[f]) uniform = uniform && p[i] == p[fs.fronts[f].front()];
      if (f > 0) decreasing = decreasing && p[fs.fronts[f].front()] < p[fs.fronts[f - 1].front()];
    }
  }
  const std::vector<std::vector<double>> hand{{0, 1}, {1, 0}, {1, 2}, {2, 1}};
  const auto hp = moga::selection_probabilities(moga::fast_nondominated_sort(hand));
  const bool hand_ok = hp == std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6};
  return {worst_sum <= kProbSumTol && uniform && decreasing && hand_ok,
          fmt("max |sum-1| %.2e, uniform %d, decreasing %d, hand case %.17g / %.17g", worst_sum, uniform, decreasing,
              hp[0], hp[2])};
}

Outcome codec_bound() {
  std::mt19937_64 rng(303);
  std::size_t violations = 0, exceptions = 0, wire_mismatch = 0;
  double worst = 0;
  for (std::size_t t = 0; t < kCodecMatrices; ++t) {
    const double scale = std::pow(10.0, -3 + 6 * moga::unit(rng));
    const double offset = (moga::unit(rng) - 0.5) * 10 * scale;
    Matrix m = oracle::random_matrix(1 + rng() % 12, 1 + rng() % 12, rng, -scale, scale);
    for (double& v : m.span()) v += offset;
    std::vector<binpack::PackedMatrix> packed;
    try {
      for (std::uint32_t d : {2u, 16u, 100u, 1024u}) {
        packed.push_back(binpack::bin_encode(m, d));
        const Matrix back = binpack::bin_decode(packed.back());
        const double half = packed.back().params.step / 2;
        for (std::size_t i = 0; i < m.size(); ++i) {
          const double e = std::abs(back.span()[i] - m.span()[i]);
          if (e > half) ++violations;
          if (half > 0) worst = std::max(worst, e / half);
        }
      }
      const auto bytes = binpack::pack_payload(packed);
      const auto again = binpack::unpack_payload(bytes);
      if (again != packed || binpack::pack_payload(again) != bytes) ++wire_mismatch;
    } catch (const std::exception&) {
      ++exceptions;
    }
  }
  const auto stored = slurp(fs::path(MOSAE_TEST_DATA) / "golden.mosu");
  const auto fresh = binpack::pack_payload(golden::matrices());
  const bool golden_ok = !stored.empty() && stored == std::string(fresh.begin(), fresh.end());
  return {violations == 0 && exceptions == 0 && wire_mismatch == 0 && golden_ok,
          fmt("%zu matrices x 4 densities: %zu bound violations (worst %.6f half-steps), %zu exceptions, %zu wire "
              "mismatches, golden %s",
              kCodecMatrices, violations, worst, exceptions, wire_mismatch, golden_ok ? "stable" : "CHANGED")};
}

Outcome compression_rate() {
  bool ok = true;
  std::string rates;
  for (std::size_t n : {10000u, 100000u, 1000000u}) {
    const double r = binpack::compression_rate(100, n);
    ok = ok && r >= kRateLo && r <= kRateHi;
    rates += fmt("N=%zu: %.5f  ", n, r);
  }
  return {ok, rates + "(reference only: 0.1108 reported for density 100, 0.118 headline)"};
}

Outcome error_bound() {
  auto cfg = cli::default_config();
  cfg.out = oracle::temp_dir("acceptance_bound");
  cli::cmd_verify_bound(cfg);
  const auto r = json_of(cfg.out / "bound_report.json");
  const double rate = r["holds_rate"];
  const double ratio = r["max_ratio"];
  return {rate == 1.0 && ratio <= 1.0 + kBoundSlack,
          fmt("%zu instances, %zu checks, holds-rate %.6f, max lhs/cond %.6f", r["instances"].get<std::size_t>(),
              r["checks"].get<std::size_t>(), rate, ratio)};
}

double naive_loss(const sae::SaeModel& m, const Matrix& x) {
  double total = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::vector<double> xs(x.row(r).begin(), x.row(r).end());
    for (std::size_t e = 1; e <= m.depth(); ++e) total += oracle::mse(oracle::forward(m, xs, e), xs);
  }
  return total / static_cast<double>(x.rows());
}

Outcome gradient_check() {
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    sae::SaeConfig c;
    c.input_dim = 3;
    c.encoder_widths = {2};
    c.seed = seed;
    auto m = sae::init_model(c);
    std::mt19937_64 rng(seed * 7);
    const Matrix x = oracle::random_matrix(16, 3, rng, -1.5, 1.5);
    auto grad = sae::zeros_like(m);
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), 0);
    sae::loss_and_gradient(m, x, rows, grad);
    std::vector<std::span<double>> ps, gs;
    sae::for_each_dense(m, [&](sae::Dense& l) {
      ps.push_back(l.weight.span());
      ps.push_back(l.bias.span());
    });
    sae::for_each_dense(grad, [&](sae::Dense& l) {
      gs.push_back(l.weight.span());
      gs.push_back(l.bias.span());
    });
    const double eps = 1e-5;
    for (std::size_t b = 0; b < ps.size(); ++b) {
      for (std::size_t i = 0; i < ps[b].size(); ++i) {
        const double keep = ps[b][i];
        ps[b][i] = keep + eps;
        const double up = naive_loss(m, x);
        ps[b][i] = keep - eps;
        const double down = naive_loss(m, x);
        ps[b][i] = keep;
        const double numeric = (up - down) / (2 * eps);
        const double denom = std::max({std::abs(gs[b][i]), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(gs[b][i] - numeric) / denom);
      }
    }
  }
  return {worst <= kGradTol, fmt("3-2-3 model, 5 seeds, max relative error %.3e", worst)};
}

Outcome clipping_equivalence() {
  std::mt19937_64 rng(707);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    sae::SaeConfig c;
    c.input_dim = 3 + rng() % 6;
    for (std::size_t k = 0, depth = 1 + rng() % 3; k < depth; ++k) c.encoder_widths.push_back(2 + rng() % 7);
    c.seed = 500 + t;
    auto m = sae::init_model(c);
    sae::for_each_dense(m, [&](sae::Dense& l) {
      for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.6 * moga::unit(rng) - 0.3;
    });
    const auto mask = clipping::sample_mask(clipping::ModelShape::of(m), 0.3 + 0.6 * moga::unit(rng), rng());
    const auto view = clipping::apply_mask(m, mask);
    const auto small = oracle::shrink(m, mask.keep);
    const auto x = oracle::random_matrix(1, c.input_dim, rng, -2, 2).values();
    for (std::size_t e = 1; e <= m.depth(); ++e) {
      std::vector<double> got(c.input_dim);
      view.reconstruct(x, e, got);
      const auto want = oracle::forward(small, x, e);
      for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
  }
  return {worst <= kClipTol, fmt("50 triples, max |masked - shrunken| %.3e", worst)};
}

Outcome storage_power_correlation() {
  auto cfg = fixture();
  cli::cmd_cliptest(cfg);
  const auto s = json_of(cfg.out / "cliptest_summary.json");
  const double r = s["correlation"]["storage_power"]["pearson"];
  return {r > kPearsonMin, fmt("%zu schedule steps, pearson(storage, power) = %.4f", s["steps"].get<std::size_t>(), r)};
}

Outcome bin_sweep() {
  auto cfg = fixture();
  cfg.timing_reps = kSweepTimingReps;
  cli::cmd_sweep_bins(cfg);
  const auto s = json_of(cfg.out / "sweep_summary.json");
  const double ref = s["uncompressed"]["f1"];
  std::istringstream csv(slurp(cfg.out / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  double worst_gap = 0;
  std::vector<double> runtimes;
  while (std::getline(csv, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    const auto d = static_cast<std::uint32_t>(std::stoul(cells[0]));
    if (d >= kSweepMinDensity) worst_gap = std::max(worst_gap, std::abs(std::stod(cells[1]) - ref));
    runtimes.push_back(std::stod(cells[3]));
  }
  const auto [lo, hi] = std::minmax_element(runtimes.begin(), runtimes.end());
  const double spread = (*hi - *lo) / *lo;
  return {worst_gap <= kSweepF1Tol && spread < kSweepRuntimeSpread,
          fmt("uncompressed F1 %.4f, max |F1 gap| at density >= %u: %.4f, runtime spread %.1f%%", ref,
              kSweepMinDensity, worst_gap, 100 * spread)};
}

Outcome optimizer_tradeoff() {
  auto cfg = fixture();
  cfg.mode = moga::Mode::joint;
  const auto t0 = Clock::now();
  cli::cmd_optimize(cfg);
  const double secs = seconds_since(t0);
  const auto j = json_of(cfg.out / "chosen.json");
  const auto& o = j["chosen"]["objectives"];
  const double drop = j["f1_drop"], storage = o["storage_ratio"], power = o["power_ratio"];
  return {drop <= kMaxF1Drop && storage <= kMaxStorage && power <= kMaxPower && secs <= kOptimizeSeconds,
          fmt("baseline F1 %.4f, chosen F1 %.4f (drop %.4f), storage %.3f, power %.3f, %.1f s",
              j["baseline"]["f1"].get<double>(), o["f1"].get<double>(), drop, storage, power, secs)};
}

Outcome early_exit_speed() {
  const auto& cfg = fixture();
  const auto data = cli::prepare_data(cfg);
  const auto model = sae::load_model(cfg.model_path());
  const sae::InferenceView view(model);
  const std::size_t L = model.depth();
  const auto with = exits::calibrate_exit_thresholds(view, data.calib, std::vector<double>(L, 0.95));
  const auto without = exits::calibrate_exit_thresholds(view, data.calib, exits::no_exit_quantiles(L, 0.95));
  int wins = 0;
  double ratio_sum = 0;
  for (int t = 0; t < kSpeedTrials; ++t) {
    // Alternate which side runs first so drift does not favour either.
    double a, b;
    if (t % 2 == 0) {
      a = objectives::measure_runtime(view, with, data.test, kSpeedReps);
      b = objectives::measure_runtime(view, without, data.test, kSpeedReps);
    } else {
      b = objectives::measure_runtime(view, without, data.test, kSpeedReps);
      a = objectives::measure_runtime(view, with, data.test, kSpeedReps);
    }
    wins += a < b;
    ratio_sum += a / b;
  }
  return {wins >= kSpeedWins,
          fmt("exits faster in %d of %d paired trials, mean time ratio %.3f", wins, kSpeedTrials,
              ratio_sum / kSpeedTrials)};
}

// Timing-derived fields are named runtime_s* or wall_seconds.
bool timing_name(const std::string& s) {
  return s.find("runtime_s") != std::string::npos || s.find("wall_seconds") != std::string::npos;
}

void strip_timing(nlohmann::json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (timing_name(it.key())) {
        it = j.erase(it);
      } else {
        strip_timing(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& e : j) strip_timing(e);
  }
}

std::string csv_without_timing(const std::string& text) {
  std::istringstream in(text);
  std::string line, out;
  std::vector<bool> keep;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (keep.empty())
      for (const auto& c : cells) keep.push_back(!timing_name(c));
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i < keep.size() && keep[i]) out += cells[i] + ',';
    out += '\n';
  }
  return out;
}

Outcome determinism() {
  const std::vector<std::string> commands{"train",      "evaluate",     "cliptest", "optimize", "rret",   "pack",
                                          "unpack",     "sweep-bins",   "verify-bound",
                                          "correlate --csv out/cliptest.csv --x storage_ratio --y power_ratio"};
  std::vector<fs::path> roots;
  for (int run = 0; run < 2; ++run) {
    const auto root = oracle::temp_dir("acceptance_det");
    for (const auto& c : commands) {
      const std::string cmd = "cd '" + root.string() + "' && '" MOSAE_TOOL "' " + c + " --seed 3 --out out >/dev/null";
      if (std::system(cmd.c_str()) != 0) return {false, "command failed: " + c};
    }
    roots.push_back(root);
  }
  std::size_t compared = 0, skipped = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(roots[0] / "out")) {
    const auto name = entry.path().filename().string();
    const auto other = roots[1] / "out" / name;
    if (!fs::exists(other)) {
      differing.push_back(name + " (missing)");
      continue;
    }
    const auto ext = entry.path().extension().string();
    bool same;
    if (ext == ".svg" && timing_name(name)) {
      ++skipped;
      continue;
    } else if (ext == ".json") {
      auto a = json_of(entry.path()), b = json_of(other);
      strip_timing(a);
      strip_timing(b);
      same = a == b;
    } else if (ext == ".csv") {
      same = csv_without_timing(slurp(entry.path())) == csv_without_timing(slurp(other));
    } else {
      same = slurp(entry.path()) == slurp(other);
    }
    ++compared;
    if (!same) differing.push_back(name);
  }
  std::string detail = fmt("%zu commands x 2 runs, %zu files compared, %zu timing plots skipped", commands.size(),
                           compared, skipped);
  for (const auto& d : differing) detail += ", differs: " + d;
  return {differing.empty() && compared > 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"non-dominated sort matches layered peeling", sort_correctness},
      {"front-rank selection probabilities", selection_suite},
      {"codec half-bin bound, wire round trip, golden payload", codec_bound},
      {"compression rate at density 100", compression_rate},
      {"relative-error bound holds", error_bound},
      {"analytic vs finite-difference gradients", gradient_check},
      {"masked forward equals shrunken model", clipping_equivalence},
      {"storage and power correlate under progressive clipping", storage_power_correlation},
      {"bin density sweep plateau and flat runtime", bin_sweep},
      {"joint search trade-off on the desk-scale fixture", optimizer_tradeoff},
      {"calibrated early exits win paired timing", early_exit_speed},
      {"seeded commands are reproducible", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %2zu  %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
