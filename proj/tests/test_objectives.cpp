// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mosae/error.hpp"
#include "mosae/objectives.hpp"
#include "oracles.hpp"

using namespace mosae;
using namespace mosae::objectives;

namespace {

struct Fixture {
  sae::SaeModel model;
  data::Dataset calib;
  data::Dataset test;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto all = data::generate_synthetic(10, 5000, 0.05, 23);
    auto [trainval, test] = data::split(all, 0.8, 1);
    auto [train_set, calib] = data::split(trainval, 0.8, 2);
    sae::SaeConfig c;
    c.input_dim = 10;
    c.encoder_widths = {8, 6, 4};
    c.epochs = 15;
    auto m = sae::init_model(c);
    sae::train(m, data::filter_label(train_set, 0));
    return Fixture{std::move(m), std::move(calib), std::move(test)};
  }();
  return f;
}

exits::ExitTrace uniform_trace(std::size_t n, std::uint32_t exit, std::vector<std::uint8_t> evaluated) {
  exits::ExitTrace t;
  t.exit_index.assign(n, exit);
  t.verdict.assign(n, 0);
  t.error.assign(n, 0.0);
  t.evaluated_early = std::move(evaluated);
  return t;
}

}  // namespace

TEST_CASE("f1 score") {
  CHECK(f1_score({10, 0, 90, 0}) == 1.0);
  CHECK(f1_score({0, 0, 100, 0}) == 0.0);
  CHECK(f1_score({2, 1, 5, 1}) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));

  const std::vector<std::uint8_t> truth{1, 0, 1, 1, 0, 0, 1};
  const std::vector<std::uint8_t> pred{1, 1, 0, 1, 0, 0, 1};
  const auto c = confusion(truth, pred);
  CHECK(c == ConfusionCounts{3, 1, 2, 1});
  CHECK(c.total() == truth.size());
  std::vector<std::uint8_t> t2(truth.rbegin(), truth.rend()), p2(pred.rbegin(), pred.rend());
  CHECK(f1_score(confusion(t2, p2)) == f1_score(c));
  CHECK_THROWS_AS(confusion(truth, std::vector<std::uint8_t>{1}), ContractError);
}

TEST_CASE("storage ratio") {
  sae::SaeConfig c;
  c.input_dim = 2;
  c.encoder_widths = {2};
  const auto toy = sae::init_model(c);
  const auto shape = clipping::ModelShape::of(toy);
  auto mask = clipping::ClipMask::all_ones(shape);
  CHECK(storage_ratio(toy, mask) == 1.0);
  mask.keep[0][0] = 0;
  CHECK(storage_ratio(toy, mask) == static_cast<double>(oracle::retained_by_enumeration(toy, mask.keep)) / 12.0);
  CHECK(storage_ratio(toy, mask) == 7.0 / 12.0);

  const auto& f = fixture();
  const auto sched = clipping::progressive_schedule(clipping::ModelShape::of(f.model), 0.1, 4);
  double prev = 1.0;
  for (const auto& m : sched.masks) {
    const double s = storage_ratio(f.model, m);
    CHECK(s <= prev);
    CHECK(s > 0.0);
    prev = s;
  }
  clipping::ClipMask wrong;
  wrong.keep = {{1, 1}};
  CHECK_THROWS_AS(storage_ratio(f.model, wrong), ContractError);
}

TEST_CASE("power ratio against the op-count walk") {
  const auto& f = fixture();
  const auto& m = f.model;
  const auto shape = clipping::ModelShape::of(m);
  const auto ones = clipping::ClipMask::all_ones(shape);
  const double full = static_cast<double>(oracle::walk_macs(m, ones.keep, 3, {false, false}));

  CHECK(power_ratio(m, ones, uniform_trace(10, 3, {0, 0})) == 1.0);

  const double exit1 = static_cast<double>(oracle::walk_macs(m, ones.keep, 1, {true, false}));
  CHECK(power_ratio(m, ones, uniform_trace(7, 1, {1, 0})) == doctest::Approx(exit1 / full).epsilon(1e-15));
  CHECK(exit1 == 10.0 * 8 + 8 * 10);

  std::mt19937_64 rng(8);
  for (int t = 0; t < 40; ++t) {
    const auto mask = clipping::sample_mask(shape, 0.3 + 0.7 * static_cast<double>(rng() % 100) / 100.0, rng());
    exits::ExitTrace tr;
    tr.evaluated_early = {static_cast<std::uint8_t>(rng() % 2), static_cast<std::uint8_t>(rng() % 2)};
    double want = 0;
    const std::size_t n = 1 + rng() % 30;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t e = 3;
      const auto pick = rng() % 3;
      if (pick == 0 && tr.evaluated_early[0]) e = 1;
      if (pick == 1 && tr.evaluated_early[1]) e = 2;
      tr.exit_index.push_back(e);
      tr.verdict.push_back(0);
      tr.error.push_back(0.0);
      want += static_cast<double>(oracle::walk_macs(m, mask.keep, e, {tr.evaluated_early[0] != 0, tr.evaluated_early[1] != 0}));
    }
    want /= static_cast<double>(n) * full;
    CHECK(power_ratio(m, mask, tr) == doctest::Approx(want).epsilon(1e-12));
    CHECK(power_ratio(m, mask, tr) <= power_ratio(m, ones, tr));
  }
}

TEST_CASE("runtime measurement") {
  const auto& f = fixture();
  const sae::InferenceView view(f.model);
  const auto p = exits::calibrate_exit_thresholds(view, f.calib, exits::no_exit_quantiles(3, 0.95));
  CHECK(measure_runtime(view, p, f.test, 5) > 0.0);
  CHECK_THROWS_AS(measure_runtime(view, p, f.test, 4), ContractError);
  CHECK_THROWS_AS(measure_runtime(view, p, f.test, 1), ContractError);

  std::vector<std::size_t> twice;
  for (std::size_t r = 0; r < f.test.size(); ++r) twice.push_back(r);
  for (std::size_t r = 0; r < f.test.size(); ++r) twice.push_back(r);
  const auto doubled = data::select_rows(f.test, twice);
  // Median of several paired ratios keeps scheduler noise out.
  std::vector<double> ratios;
  for (int t = 0; t < 5; ++t) {
    const double one = measure_runtime(view, p, f.test, 5);
    const double two = measure_runtime(view, p, doubled, 5);
    ratios.push_back(two / one);
  }
  std::sort(ratios.begin(), ratios.end());
  MESSAGE("doubling ratio " << ratios[2]);
  CHECK(ratios[2] >= 1.5);
  CHECK(ratios[2] <= 3.0);
}

TEST_CASE("evaluate_candidate") {
  const auto& f = fixture();
  const EvalContext ctx(f.model, f.test, f.calib, 3);
  CHECK(ctx.calib.anomaly_count() == 0);
  const auto shape = clipping::ModelShape::of(f.model);

  SUBCASE("baseline matches plain classification") {
    const auto v = baseline(ctx);
    const auto normals = data::filter_label(f.calib, 0);
    const double tau = sae::calibrate_final_threshold(f.model, normals, 0.95);
    const auto pred = sae::classify(f.model, f.test, tau);
    CHECK(v.f1 == f1_score(confusion(f.test.labels, pred)));
    CHECK(v.storage_ratio == 1.0);
    CHECK(v.power_ratio == 1.0);
    CHECK(v.runtime_cost == 1.0);
    CHECK(v.runtime_s > 0.0);
    MESSAGE("baseline F1 " << v.f1);
  }

  SUBCASE("non-timing fields are deterministic") {
    const auto mask = clipping::sample_mask(shape, 0.7, 2);
    const std::vector<double> q{0.6, 0.8, 0.93};
    auto a = evaluate_candidate(ctx, mask, q);
    auto b = evaluate_candidate(ctx, mask, q);
    a.runtime_s = b.runtime_s = 0;
    CHECK(a == b);
  }

  SUBCASE("matches a manual composition") {
    const auto mask = clipping::sample_mask(shape, 0.6, 77);
    const std::vector<double> q{0.7, 0.0, 0.9};
    const auto v = evaluate_candidate(ctx, mask, q);
    const auto view = clipping::apply_mask(f.model, mask);
    const auto policy = exits::calibrate_exit_thresholds(view, f.calib, q);
    const auto [labels, trace] = exits::infer_with_exits(view, policy, f.test);
    CHECK(v.f1 == f1_score(confusion(f.test.labels, labels)));
    CHECK(v.storage_ratio == storage_ratio(f.model, mask));
    CHECK(v.power_ratio == power_ratio(f.model, mask, trace));
    CHECK(v.mean_exit == trace.mean_exit_index());
    CHECK(v.runtime_cost < 1.0);
    CHECK(v.power_ratio <= v.runtime_cost);
  }

  SUBCASE("timing can be skipped") {
    const EvalContext quiet(f.model, f.test, f.calib, 0);
    CHECK(baseline(quiet).runtime_s == 0.0);
  }

  CHECK_THROWS_AS(EvalContext(f.model, data::generate_synthetic(4, 50, 0.1, 1), f.calib), ContractError);
}

TEST_CASE("storage and power move together under progressive clipping") {
  const auto& f = fixture();
  const EvalContext ctx(f.model, f.test, f.calib, 0);
  const auto shape = clipping::ModelShape::of(f.model);
  const auto sched = clipping::progressive_schedule(shape, 0.05, 3);
  std::vector<double> s, p;
  for (const auto& m : sched.masks) {
    const auto v = evaluate_candidate(ctx, m, exits::no_exit_quantiles(3, 0.95));
    s.push_back(v.storage_ratio);
    p.push_back(v.power_ratio);
  }
  CHECK(correlation(s, p, CorrelationMethod::pearson) > 0.9);
}

TEST_CASE("correlation") {
  using M = CorrelationMethod;
  const std::vector<double> x{1, 2, 3}, y{2, 4, 6}, ny{-1, -2, -3};
  CHECK(correlation(x, y, M::pearson) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(correlation(x, y, M::spearman) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(correlation(x, ny, M::pearson) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(correlation(x, ny, M::spearman) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(correlation(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}, M::spearman) ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK(average_ranks(std::vector<double>{10, 20, 20, 5}) == std::vector<double>{2, 3.5, 3.5, 1});

  const std::vector<double> w{0.3, -1, 8, 2.5, 2.5};
  CHECK(correlation(w, w, M::pearson) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(correlation(w, w, M::spearman) == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(correlation(std::vector<double>{1, 1, 1}, x, M::pearson), ContractError);
  CHECK_THROWS_AS(correlation(std::vector<double>{1, 1, 1}, x, M::spearman), ContractError);
  CHECK_THROWS_AS(correlation(std::vector<double>{1, 2}, std::vector<double>{1, 2}, M::pearson), ContractError);
  CHECK_THROWS_AS(correlation(x, std::vector<double>{1, 2, 3, 4}, M::pearson), ContractError);
}
