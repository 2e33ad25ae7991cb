// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>

#include "mosae/binpack.hpp"
#include "mosae/cli.hpp"
#include "mosae/clipping.hpp"
#include "mosae/error.hpp"
#include "mosae/exits.hpp"
#include "mosae/objectives.hpp"
#include "report.hpp"

namespace mosae::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using objectives::ObjectiveVector;

Prepared prepare_data(const RunConfig& cfg) {
  cfg.validate();
  const auto& dc = cfg.data;
  const auto all = [&]() -> data::Dataset {
    switch (dc.source) {
      case DataSource::csv:
        if (!dc.label_column.empty() && dc.label_column[0] == '#') {
          return data::load_labeled_csv(dc.path, static_cast<std::size_t>(std::stoull(dc.label_column.substr(1))));
        }
        return data::load_labeled_csv(dc.path, dc.label_column);
      case DataSource::smd:
        return data::load_smd(dc.path, dc.smd_name);
      case DataSource::synthetic:
        break;
    }
    return data::generate_synthetic(dc.dims, dc.samples, dc.anomaly_rate, dc.seed);
  }();
  auto [trainval, test] = data::split(all, 0.8, dc.split_seed);
  auto [train, calib] = data::split(trainval, 0.8, dc.split_seed + 1);
  Prepared p{data::filter_label(train, 0), data::filter_label(calib, 0), std::move(test)};
  if (p.train.size() == 0 || p.calib.size() == 0) throw ContractError("dataset has too few normal rows to split");
  if (dc.standardize) {
    const auto params = data::fit_standardization(p.train);
    p.train = data::apply_standardization(p.train, params);
    p.calib = data::apply_standardization(p.calib, params);
    p.test = data::apply_standardization(p.test, params);
  }
  return p;
}

namespace {

sae::SaeModel load_checked(const RunConfig& cfg, const Prepared& p) {
  const auto path = cfg.model_path();
  if (!fs::exists(path)) throw IoError("no checkpoint at " + path.string() + " (run `train` first)");
  auto m = sae::load_model(path);
  if (m.input_dim() != p.test.dims()) {
    throw ContractError("checkpoint expects " + std::to_string(m.input_dim()) + " features, data has " +
                        std::to_string(p.test.dims()));
  }
  return m;
}

ordered_json objective_json(const ObjectiveVector& v) {
  return {{"f1", v.f1},
          {"runtime_s", v.runtime_s},
          {"runtime_cost", v.runtime_cost},
          {"storage_ratio", v.storage_ratio},
          {"power_ratio", v.power_ratio},
          {"mean_exit", v.mean_exit}};
}

std::vector<std::string> quantile_header(std::size_t depth) {
  std::vector<std::string> h;
  for (std::size_t k = 1; k <= depth; ++k) h.push_back("q" + std::to_string(k));
  return h;
}

template <class T>
std::vector<T> concat(std::vector<T> a, const std::vector<T>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::vector<std::string> num_cells(std::span<const double> v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(num(x));
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

sae::SaeModel roundtrip(const sae::SaeModel& m, std::uint32_t density, std::size_t* wire_bytes = nullptr) {
  std::vector<binpack::PackedMatrix> packed;
  for (const auto& mat : sae::parameter_matrices(m)) packed.push_back(binpack::bin_encode(mat, density));
  const auto bytes = binpack::pack_payload(packed);
  if (wire_bytes) *wire_bytes = bytes.size();
  std::vector<Matrix> decoded;
  for (const auto& p : binpack::unpack_payload(bytes)) decoded.push_back(binpack::bin_decode(p));
  return sae::model_from_matrices(decoded, m.config);
}

}  // namespace

Written cmd_train(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  auto sc = cfg.sae;
  sc.input_dim = p.train.dims();
  auto model = sae::init_model(sc);
  const auto report = sae::train(model, p.train);

  const double tau = sae::calibrate_final_threshold(model, p.calib, cfg.final_quantile);
  const auto pred = sae::classify(model, p.test, tau);
  const auto cm = objectives::confusion(p.test.labels, pred);

  OutputSet out(cfg.out);
  out.bytes(cfg.model_path(), sae::serialize_model(model));
  ordered_json j;
  j["model"] = cfg.model_path().string();
  j["input_dim"] = sc.input_dim;
  j["widths"] = sc.encoder_widths;
  j["parameters"] = model.parameter_count();
  j["rows"] = {{"train", p.train.size()}, {"calib", p.calib.size()}, {"test", p.test.size()}};
  j["epochs"] = sc.epochs;
  j["epoch_loss"] = report.epoch_loss;
  j["first_loss"] = report.epoch_loss.empty() ? 0.0 : report.epoch_loss.front();
  j["final_loss"] = report.final_loss;
  j["threshold"] = tau;
  j["test_f1"] = objectives::f1_score(cm);
  j["wall_seconds"] = report.wall_seconds;
  out.json("train_report.json", j);
  return out.commit();
}

Written cmd_cliptest(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto model = load_checked(cfg, p);
  const auto shape = clipping::ModelShape::of(model);
  const objectives::EvalContext ctx(model, p.test, p.calib, cfg.timing_reps, cfg.final_quantile);
  const auto quantiles = exits::no_exit_quantiles(shape.depth(), cfg.final_quantile);

  std::vector<clipping::ClipMask> masks{clipping::ClipMask::all_ones(shape)};
  const auto sched = clipping::progressive_schedule(shape, cfg.clip_step, cfg.seed);
  masks.insert(masks.end(), sched.masks.begin(), sched.masks.end());

  CsvTable table({"step", "pruned_neurons", "retained_fraction", "f1", "storage_ratio", "power_ratio", "runtime_s"});
  std::vector<double> f1, storage, power, runtime;
  const double hidden = static_cast<double>(shape.hidden_neurons());
  for (std::size_t s = 0; s < masks.size(); ++s) {
    const auto v = objectives::evaluate_candidate(ctx, masks[s], quantiles);
    const auto pruned = masks[s].pruned_total();
    table.row({std::to_string(s), std::to_string(pruned), num((hidden - static_cast<double>(pruned)) / hidden),
               num(v.f1), num(v.storage_ratio), num(v.power_ratio), num(v.runtime_s)});
    f1.push_back(v.f1);
    storage.push_back(v.storage_ratio);
    power.push_back(v.power_ratio);
    runtime.push_back(v.runtime_s);
  }

  OutputSet out(cfg.out);
  out.text("cliptest.csv", table.str());
  ordered_json j;
  j["steps"] = masks.size();
  j["clip_step"] = cfg.clip_step;
  j["seed"] = cfg.seed;
  j["correlation"] = {{"storage_power", correlation_json(storage, power)},
                      {"power_f1", correlation_json(power, f1)},
                      {"runtime_s_f1", correlation_json(runtime, f1)}};
  out.json("cliptest_summary.json", j);
  out.text("cliptest_power_storage.svg", svg_scatter("Power vs storage", "storage ratio", "power ratio", storage, power));
  out.text("cliptest_power_f1.svg", svg_scatter("Power vs F1", "F1", "power ratio", f1, power));
  out.text("cliptest_runtime_s_f1.svg", svg_scatter("Runtime vs F1", "F1", "runtime (s)", f1, runtime));
  return out.commit();
}

Written cmd_optimize(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto model = load_checked(cfg, p);
  const auto shape = clipping::ModelShape::of(model);
  const objectives::EvalContext ctx(model, p.test, p.calib, cfg.timing_reps, cfg.final_quantile);
  const auto result = moga::run_optimizer(ctx, cfg.ga, cfg.mode);

  const auto header = concat<std::string>({"generation", "genome", "rank", "f1", "runtime_s", "runtime_cost",
                                           "storage_ratio", "power_ratio", "mean_exit"},
                                          quantile_header(shape.depth()));
  auto row_of = [&](const moga::ArchiveEntry& e) {
    const auto& v = e.objectives;
    return concat<std::string>({std::to_string(e.generation), e.genome.hex(), std::to_string(e.rank), num(v.f1),
                                num(v.runtime_s), num(v.runtime_cost), num(v.storage_ratio), num(v.power_ratio),
                                num(v.mean_exit)},
                               num_cells(moga::decode_genome(e.genome, shape).quantiles));
  };
  CsvTable archive(header), front(header);
  for (const auto& e : result.archive) archive.row(row_of(e));
  const auto members = result.front();
  for (auto i : members) front.row(row_of(result.archive[i]));

  // Highest F1 under both budget caps when possible, otherwise highest F1.
  std::size_t chosen = members.front();
  bool capped = false;
  for (bool need_caps : {true, false}) {
    bool found = false;
    for (auto i : members) {
      const auto& v = result.archive[i].objectives;
      if (need_caps && !(v.storage_ratio <= 0.5 && v.power_ratio <= 0.5)) continue;
      if (!found || v.f1 > result.archive[chosen].objectives.f1) {
        chosen = i;
        found = true;
      }
    }
    if (found) {
      capped = need_caps;
      break;
    }
  }
  const auto& best = result.archive[chosen];
  const auto decoded = moga::decode_genome(best.genome, shape);

  std::vector<double> f_storage, f_power;
  for (auto i : members) {
    f_storage.push_back(result.archive[i].objectives.storage_ratio);
    f_power.push_back(result.archive[i].objectives.power_ratio);
  }

  OutputSet out(cfg.out);
  out.text("archive.csv", archive.str());
  out.text("front.csv", front.str());
  ordered_json j;
  j["mode"] = moga::mode_name(cfg.mode);
  j["seed"] = cfg.ga.seed;
  j["population"] = cfg.ga.population;
  j["generations"] = cfg.ga.generations;
  j["evaluated"] = result.archive.size();
  j["front_size"] = members.size();
  j["baseline"] = objective_json(result.baseline);
  j["chosen"] = {{"genome", best.genome.hex()},
                 {"generation", best.generation},
                 {"within_caps", capped},
                 {"objectives", objective_json(best.objectives)},
                 {"quantiles", decoded.quantiles},
                 {"kept_per_layer", decoded.mask.kept_counts()}};
  j["f1_drop"] = result.baseline.f1 - best.objectives.f1;
  out.json("chosen.json", j);
  out.text("front_power_storage.svg",
           svg_scatter("Front: power vs storage", "storage ratio", "power ratio", f_storage, f_power));
  return out.commit();
}

Written cmd_rret(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto model = load_checked(cfg, p);
  const auto shape = clipping::ModelShape::of(model);
  const objectives::EvalContext ctx(model, p.test, p.calib, cfg.timing_reps, cfg.final_quantile);
  const sae::InferenceView view(model);
  const auto ones = clipping::ClipMask::all_ones(shape);

  CsvTable table(concat<std::string>({"policy", "seed"}, concat<std::string>(quantile_header(shape.depth()),
                                                                            {"f1", "runtime_s", "runtime_cost",
                                                                             "power_ratio", "mean_exit"})));
  std::vector<double> f1, runtime, cost, power;
  std::mt19937_64 master(cfg.seed);
  for (std::size_t i = 0; i < cfg.rret_policies; ++i) {
    const std::uint64_t seed = master();
    const auto policy = exits::rret_policy(view, ctx.calib, seed);
    const auto v = objectives::evaluate_candidate(ctx, ones, policy.quantiles);
    table.row(concat<std::string>({std::to_string(i), std::to_string(seed)},
                                  concat<std::string>(num_cells(policy.quantiles),
                                                      {num(v.f1), num(v.runtime_s), num(v.runtime_cost),
                                                       num(v.power_ratio), num(v.mean_exit)})));
    f1.push_back(v.f1);
    runtime.push_back(v.runtime_s);
    cost.push_back(v.runtime_cost);
    power.push_back(v.power_ratio);
  }

  OutputSet out(cfg.out);
  out.text("rret.csv", table.str());
  ordered_json j;
  j["policies"] = cfg.rret_policies;
  j["seed"] = cfg.seed;
  j["correlation"] = {{"runtime_s_power", correlation_json(runtime, power)},
                      {"runtime_s_f1", correlation_json(runtime, f1)},
                      {"power_f1", correlation_json(power, f1)},
                      {"runtime_cost_power", correlation_json(cost, power)},
                      {"runtime_cost_f1", correlation_json(cost, f1)}};
  out.json("rret_summary.json", j);
  out.text("rret_runtime_s_power.svg", svg_scatter("RRET: runtime vs power", "power ratio", "runtime (s)", power, runtime));
  out.text("rret_runtime_s_f1.svg", svg_scatter("RRET: runtime vs F1", "F1", "runtime (s)", f1, runtime));
  out.text("rret_power_f1.svg", svg_scatter("RRET: power vs F1", "F1", "power ratio", f1, power));
  return out.commit();
}

Written cmd_evaluate(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto model = load_checked(cfg, p);
  const auto shape = clipping::ModelShape::of(model);
  const objectives::EvalContext ctx(model, p.test, p.calib, cfg.timing_reps, cfg.final_quantile);
  const auto base = objectives::baseline(ctx);
  const auto with_exits = objectives::evaluate_candidate(ctx, clipping::ClipMask::all_ones(shape),
                                                         std::vector<double>(shape.depth(), cfg.final_quantile));
  const double tau = sae::calibrate_final_threshold(model, ctx.calib, cfg.final_quantile);
  const auto cm = objectives::confusion(p.test.labels, sae::classify(model, p.test, tau));

  OutputSet out(cfg.out);
  ordered_json j;
  j["model"] = cfg.model_path().string();
  j["test_rows"] = p.test.size();
  j["final_quantile"] = cfg.final_quantile;
  j["threshold"] = tau;
  j["confusion"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
  j["no_exits"] = objective_json(base);
  j["exits"] = objective_json(with_exits);
  out.json("evaluate.json", j);
  return out.commit();
}

Written cmd_pack(const RunConfig& cfg) {
  const auto path = cfg.model_path();
  if (!fs::exists(path)) throw IoError("no checkpoint at " + path.string());
  const auto model = sae::load_model(path);
  const auto mats = sae::parameter_matrices(model);
  std::vector<binpack::PackedMatrix> packed;
  std::size_t n = 0;
  double max_err = 0, max_half_steps = 0;
  for (const auto& m : mats) {
    packed.push_back(binpack::bin_encode(m, cfg.density));
    const Matrix back = binpack::bin_decode(packed.back());
    const double half = packed.back().params.step / 2;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double e = std::abs(back.span()[i] - m.span()[i]);
      max_err = std::max(max_err, e);
      if (half > 0) max_half_steps = std::max(max_half_steps, e / half);
    }
    n += m.size();
  }
  const auto bytes = binpack::pack_payload(packed);

  OutputSet out(cfg.out);
  out.bytes(cfg.payload_path(), bytes);
  ordered_json j;
  j["payload"] = cfg.payload_path().string();
  j["density"] = cfg.density;
  j["matrices"] = packed.size();
  j["parameters"] = n;
  j["compression_rate"] = binpack::compression_rate(cfg.density, n);
  j["compression_rate_at_10k"] = binpack::compression_rate(cfg.density, 10000);
  j["wire_bytes"] = bytes.size();
  j["original_bytes"] = 8 * n;
  j["wire_ratio"] = static_cast<double>(bytes.size()) / static_cast<double>(8 * n);
  j["max_abs_error"] = max_err;
  j["max_error_in_half_steps"] = max_half_steps;
  // Published figures for comparison only.
  j["reference_rates"] = {{"density_100_experiment", 0.1108}, {"headline", 0.118}};
  out.json("pack_report.json", j);
  return out.commit();
}

Written cmd_unpack(const RunConfig& cfg) {
  const auto bytes = read_file(cfg.payload_path());
  std::vector<Matrix> mats;
  std::vector<std::uint32_t> densities;
  for (const auto& p : binpack::unpack_payload(bytes)) {
    mats.push_back(binpack::bin_decode(p));
    densities.push_back(p.params.density);
  }
  const auto model = sae::model_from_matrices(mats, cfg.sae);

  OutputSet out(cfg.out);
  const auto target = cfg.out / "unpacked.mosm";
  out.bytes(target, sae::serialize_model(model));
  ordered_json j;
  j["payload"] = cfg.payload_path().string();
  j["model"] = target.string();
  j["matrices"] = mats.size();
  j["densities"] = densities;
  j["parameters"] = model.parameter_count();
  j["input_dim"] = model.input_dim();
  j["widths"] = model.config.encoder_widths;
  out.json("unpack_report.json", j);
  return out.commit();
}

Written cmd_sweep_bins(const RunConfig& cfg) {
  const auto p = prepare_data(cfg);
  const auto model = load_checked(cfg, p);
  const auto reference = objectives::baseline(objectives::EvalContext(model, p.test, p.calib, cfg.timing_reps,
                                                                      cfg.final_quantile));
  std::size_t n = 0;
  for (const auto& m : sae::parameter_matrices(model)) n += m.size();

  CsvTable table({"density", "f1", "f1_delta", "runtime_s", "compression_rate", "wire_bytes"});
  std::vector<double> dens, f1, runtime;
  for (auto d : cfg.sweep) {
    std::size_t wire = 0;
    const auto binned = roundtrip(model, d, &wire);
    const auto v =
        objectives::baseline(objectives::EvalContext(binned, p.test, p.calib, cfg.timing_reps, cfg.final_quantile));
    table.row({std::to_string(d), num(v.f1), num(v.f1 - reference.f1), num(v.runtime_s),
               num(binpack::compression_rate(d, n)), std::to_string(wire)});
    dens.push_back(std::log2(static_cast<double>(d)));
    f1.push_back(v.f1);
    runtime.push_back(v.runtime_s);
  }
  const auto [lo, hi] = std::minmax_element(runtime.begin(), runtime.end());

  OutputSet out(cfg.out);
  out.text("sweep.csv", table.str());
  ordered_json j;
  j["densities"] = cfg.sweep;
  j["parameters"] = n;
  j["uncompressed"] = objective_json(reference);
  j["runtime_s_spread"] = *lo > 0 ? (*hi - *lo) / *lo : 0.0;
  out.json("sweep_summary.json", j);
  out.text("sweep_f1.svg", svg_scatter("F1 vs bin density", "log2 density", "F1", dens, f1));
  out.text("sweep_runtime_s.svg", svg_scatter("Runtime vs bin density", "log2 density", "runtime (s)", dens, runtime));
  return out.commit();
}

Written cmd_verify_bound(const RunConfig& cfg) {
  if (cfg.verify_densities.empty()) throw ContractError("run.verify_densities must not be empty");
  std::mt19937_64 rng(cfg.seed);
  ordered_json instances = ordered_json::array();
  std::size_t checks = 0, held = 0;
  double max_ratio = 0;
  for (std::size_t i = 0; i < cfg.verify_instances; ++i) {
    const std::size_t n = 2 + rng() % 7;
    // Diagonal dominance keeps every instance comfortably invertible.
    Matrix a(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) a(r, c) = 2 * moga::unit(rng) - 1;
      a(r, r) += static_cast<double>(n);
    }
    Vector x(n);
    for (std::size_t r = 0; r < n; ++r) x[r] = 2 * moga::unit(rng) - 1;
    x[0] += 1.5;
    for (auto d : cfg.verify_densities) {
      const auto r = binpack::verify_error_bound(a, d, x);
      ++checks;
      held += r.holds;
      max_ratio = std::max(max_ratio, r.lhs / r.cond);
      instances.push_back(
          {{"instance", i}, {"n", n}, {"density", d}, {"cond", r.cond}, {"lhs", r.lhs}, {"ratio", r.lhs / r.cond},
           {"holds", r.holds}});
    }
  }

  OutputSet out(cfg.out);
  ordered_json j;
  j["seed"] = cfg.seed;
  j["instances"] = cfg.verify_instances;
  j["densities"] = cfg.verify_densities;
  j["checks"] = checks;
  j["holds_rate"] = checks ? static_cast<double>(held) / static_cast<double>(checks) : 1.0;
  j["max_ratio"] = max_ratio;
  j["details"] = std::move(instances);
  out.json("bound_report.json", j);
  return out.commit();
}

Written cmd_correlate(const RunConfig& cfg, const fs::path& csv, const std::string& x, const std::string& y) {
  const auto t = read_numeric_csv(csv);
  const auto& xs = t.column(x);
  const auto& ys = t.column(y);
  OutputSet out(cfg.out);
  ordered_json j;
  j["csv"] = csv.string();
  j["x"] = x;
  j["y"] = y;
  j["n"] = xs.size();
  const auto c = correlation_json(xs, ys);
  j["pearson"] = c["pearson"];
  j["spearman"] = c["spearman"];
  out.json("correlate.json", j);
  out.text("correlate.svg", svg_scatter(y + " vs " + x, x, y, xs, ys));
  return out.commit();
}

}  // namespace mosae::cli
