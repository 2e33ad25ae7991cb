// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>

#include "mosae/clipping.hpp"
#include "mosae/error.hpp"
#include "mosae/exits.hpp"
#include "oracles.hpp"

using namespace mosae;
using namespace mosae::exits;

namespace {

struct Fixture {
  sae::SaeModel model;
  data::Dataset calib;
  data::Dataset test;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const auto all = data::generate_synthetic(8, 4000, 0.1, 17);
    auto [trainval, test] = data::split(all, 0.8, 1);
    auto [train_set, calib] = data::split(trainval, 0.8, 2);
    sae::SaeConfig c;
    c.input_dim = 8;
    c.encoder_widths = {6, 4, 3};
    c.epochs = 20;
    c.seed = 5;
    auto m = sae::init_model(c);
    sae::train(m, data::filter_label(train_set, 0));
    return Fixture{std::move(m), std::move(calib), std::move(test)};
  }();
  return f;
}

double f1_of(const std::vector<std::uint8_t>& truth, const std::vector<std::uint8_t>& pred) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    tp += truth[i] && pred[i];
    fp += !truth[i] && pred[i];
    fn += truth[i] && !pred[i];
  }
  return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

}  // namespace

TEST_CASE("thresholds follow the nearest-rank rule") {
  const std::vector<Vector> errs{Vector{40, 10, 30, 20}, Vector{1, 2, 3, 4}};
  const auto p = policy_from_errors(errs, std::vector<double>{0.5, 0.5}, "t");
  CHECK(p.thresholds[0] == 20.0);
  CHECK(p.thresholds[1] == 2.0);
  const auto top = policy_from_errors(errs, std::vector<double>{1.0, 1.0}, "t");
  CHECK(top.thresholds[0] == 40.0);
  CHECK(top.thresholds[1] == 4.0);
  const auto off = policy_from_errors(errs, std::vector<double>{0.0, 0.9}, "t");
  CHECK(off.thresholds[0] == kDisabledThreshold);
  CHECK_FALSE(off.early_exit_enabled(0));
  CHECK_THROWS_AS(policy_from_errors(errs, std::vector<double>{0.5}, "t"), ContractError);
  CHECK_THROWS_AS(policy_from_errors(errs, std::vector<double>{0.5, 1.5}, "t"), ContractError);
}

TEST_CASE("calibration uses normal rows and ignores duplication") {
  const auto& f = fixture();
  const sae::InferenceView view(f.model);
  const std::vector<double> q{0.9, 0.8, 0.95};
  const auto p = calibrate_exit_thresholds(view, f.calib, q);
  const auto normals = data::filter_label(f.calib, 0);
  const auto direct = calibrate_exit_thresholds(view, normals, q);
  CHECK(p.thresholds == direct.thresholds);

  std::vector<std::size_t> twice;
  for (std::size_t r = 0; r < normals.size(); ++r) {
    twice.push_back(r);
    twice.push_back(r);
  }
  const auto doubled = calibrate_exit_thresholds(view, data::select_rows(normals, twice), q);
  CHECK(doubled.thresholds == p.thresholds);

  const auto max_p = calibrate_exit_thresholds(view, normals, std::vector<double>{1, 1, 1});
  const auto errs = view.all_exit_errors(normals);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(max_p.thresholds[k] == *std::max_element(errs[k].values().begin(), errs[k].values().end()));
  }

  const auto anomalies = data::filter_label(f.calib, 1);
  CHECK_THROWS_AS(calibrate_exit_thresholds(view, anomalies, q), ContractError);
}

TEST_CASE("exit semantics") {
  const auto& f = fixture();
  const sae::InferenceView view(f.model);
  const std::size_t L = 3;

  SUBCASE("zero thresholds never fire on positive errors") {
    ExitPolicy p{{0.5, 0.5, 0.95}, {0.0, 0.0, 0.1}, "manual"};
    const auto [labels, trace] = infer_with_exits(view, p, f.test);
    for (auto e : trace.exit_index) CHECK(e == L);
  }

  SUBCASE("a saturated first exit takes every sample") {
    ExitPolicy p{{1, 1, 1}, {1e300, 0.0, 0.0}, "manual"};
    const auto [labels, trace] = infer_with_exits(view, p, f.test);
    for (auto e : trace.exit_index) CHECK(e == 1);
    CHECK(std::count(labels.begin(), labels.end(), 1) == 0);
    CHECK(trace.evaluated_early == std::vector<std::uint8_t>{1, 1});
  }

  SUBCASE("disabled exits reproduce plain classification exactly") {
    const auto normals = data::filter_label(f.calib, 0);
    const auto p = calibrate_exit_thresholds(view, normals, no_exit_quantiles(L, 0.95));
    const auto [labels, trace] = infer_with_exits(view, p, f.test);
    const double tau = sae::calibrate_final_threshold(f.model, normals, 0.95);
    CHECK(p.thresholds.back() == tau);
    CHECK(labels == sae::classify(f.model, f.test, tau));
    CHECK(trace.evaluated_early == std::vector<std::uint8_t>{0, 0});
    CHECK(trace.mean_exit_index() == 3.0);
  }

  SUBCASE("calibrated exits shorten the path and keep accuracy") {
    const auto normals = data::filter_label(f.calib, 0);
    const auto p = calibrate_exit_thresholds(view, normals, std::vector<double>(L, 0.95));
    const auto [labels, trace] = infer_with_exits(view, p, f.test);
    const auto base = sae::classify(f.model, f.test, sae::calibrate_final_threshold(f.model, normals, 0.95));
    MESSAGE("mean exit " << trace.mean_exit_index() << ", F1 " << f1_of(f.test.labels, labels) << " vs "
                         << f1_of(f.test.labels, base));
    CHECK(trace.mean_exit_index() < static_cast<double>(L));
    CHECK(std::abs(f1_of(f.test.labels, labels) - f1_of(f.test.labels, base)) <= 0.1);
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (trace.exit_index[i] < L) CHECK(labels[i] == 0);
    }
  }

  SUBCASE("raising an exit threshold only adds early leavers") {
    const auto normals = data::filter_label(f.calib, 0);
    std::vector<std::uint32_t> prev;
    for (double q : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
      const auto p = calibrate_exit_thresholds(view, normals, std::vector<double>{q, 0.5, 0.95});
      const auto trace = infer_with_exits(view, p, f.test).second;
      if (!prev.empty()) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
          if (prev[i] <= 1) CHECK(trace.exit_index[i] <= 1);
        }
      }
      prev = trace.exit_index;
    }
  }

  SUBCASE("masked views run through the same path") {
    const auto mask = clipping::sample_mask(clipping::ModelShape::of(f.model), 0.6, 3);
    const auto masked = clipping::apply_mask(f.model, mask);
    const auto p = calibrate_exit_thresholds(masked, f.calib, std::vector<double>{0.8, 0.8, 0.95});
    const auto [labels, trace] = infer_with_exits(masked, p, f.test);
    CHECK(labels.size() == f.test.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
      CHECK(trace.exit_index[i] >= 1);
      CHECK(trace.exit_index[i] <= L);
      CHECK(trace.error[i] >= 0.0);
    }
  }

  CHECK_THROWS_AS(infer_with_exits(view, ExitPolicy{{0.5}, {0.1}, "x"}, f.test), ContractError);
}

TEST_CASE("random quantile policies") {
  const auto& f = fixture();
  const sae::InferenceView view(f.model);
  const auto a = rret_policy(view, f.calib, 42);
  const auto b = rret_policy(view, f.calib, 42);
  CHECK(a.thresholds == b.thresholds);
  CHECK(a.quantiles == b.quantiles);
  CHECK(rret_policy(view, f.calib, 43).quantiles != a.quantiles);
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (double q : rret_policy(view, f.calib, s).quantiles) {
      CHECK(q >= 0.0);
      CHECK(q <= 1.0);
    }
  }
}
