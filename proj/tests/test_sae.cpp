// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mosae/error.hpp"
#include "mosae/sae.hpp"
#include "oracles.hpp"

using namespace mosae;
using namespace mosae::sae;

namespace {

SaeConfig config(std::size_t d, std::vector<std::size_t> widths, std::uint64_t seed = 3) {
  SaeConfig c;
  c.input_dim = d;
  c.encoder_widths = std::move(widths);
  c.seed = seed;
  return c;
}

// Joint loss recomputed with the naive forward pass.
double naive_loss(const SaeModel& m, const Matrix& x) {
  double total = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const std::vector<double> xs(x.row(r).begin(), x.row(r).end());
    for (std::size_t e = 1; e <= m.depth(); ++e) total += oracle::mse(oracle::forward(m, xs, e), xs);
  }
  return total / static_cast<double>(x.rows());
}

double max_gradient_error(SaeModel m, const Matrix& x) {
  SaeModel grad = zeros_like(m);
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  const double loss = loss_and_gradient(m, x, rows, grad);
  CHECK(loss == doctest::Approx(naive_loss(m, x)).epsilon(1e-12));

  std::vector<std::span<double>> params, grads;
  for_each_dense(m, [&](Dense& l) {
    params.push_back(l.weight.span());
    params.push_back(l.bias.span());
  });
  for_each_dense(grad, [&](Dense& l) {
    grads.push_back(l.weight.span());
    grads.push_back(l.bias.span());
  });
  const double eps = 1e-5;
  double worst = 0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) {
      const double keep = params[b][i];
      params[b][i] = keep + eps;
      const double up = naive_loss(m, x);
      params[b][i] = keep - eps;
      const double down = naive_loss(m, x);
      params[b][i] = keep;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[b][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

Matrix sample_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_matrix(n, d, rng, -1.5, 1.5);
}

}  // namespace

TEST_CASE("init_model shapes and determinism") {
  const auto a = init_model(config(8, {4}));
  CHECK(a.encoder.size() == 1);
  CHECK(a.decoder.size() == 1);
  CHECK(a.heads.empty());
  CHECK(a.encoder[0].weight.rows() == 4);
  CHECK(a.encoder[0].weight.cols() == 8);
  CHECK(a.decoder[0].weight.rows() == 8);
  CHECK(a.decoder[0].weight.cols() == 4);
  CHECK(a == init_model(config(8, {4})));
  CHECK(a != init_model(config(8, {4}, 4)));

  const auto b = init_model(config(10, {6, 4, 3}));
  b.check_invariants();
  CHECK(b.heads.size() == 2);
  CHECK(b.heads[1].weight.rows() == 10);
  CHECK(b.heads[1].weight.cols() == 4);
  CHECK(b.decoder[0].weight.cols() == 3);
  CHECK(b.decoder[0].weight.rows() == 4);
  CHECK(b.decoder[2].weight.rows() == 10);
  for_each_dense(b, [](const Dense& l) {
    CHECK(oracle::mse(l.bias.values(), std::vector<double>(l.bias.size(), 0.0)) == 0.0);
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in_dim() + l.out_dim()));
    CHECK(max_abs(l.weight) <= bound);
  });
  const std::size_t expect = (10 * 6 + 6) + (6 * 4 + 4) + (4 * 3 + 3) + (3 * 4 + 4) + (4 * 6 + 6) + (6 * 10 + 10) +
                             (6 * 10 + 10) + (4 * 10 + 10);
  CHECK(b.parameter_count() == expect);

  CHECK_THROWS_AS(init_model(config(8, {})), ContractError);
  CHECK_THROWS_AS(init_model(config(8, {0})), ContractError);
  auto bad = config(8, {4});
  bad.momentum = 1.0;
  CHECK_THROWS_AS(init_model(bad), ContractError);
}

TEST_CASE("analytic gradient matches central differences") {
  SUBCASE("3-2-3") {
    const auto m = init_model(config(3, {2}, 21));
    CHECK(max_gradient_error(m, sample_rows(4, 3, 5)) <= 1e-4);
  }
  SUBCASE("with exit heads") {
    auto m = init_model(config(5, {4, 3, 2}, 8));
    for_each_dense(m, [](Dense& l) {
      for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] = 0.05 * static_cast<double>(i + 1);
    });
    CHECK(max_gradient_error(m, sample_rows(6, 5, 6)) <= 1e-4);
  }
}

TEST_CASE("hand-computed reconstruction errors") {
  auto m = init_model(config(2, {1}));
  m.encoder[0] = Dense{Matrix{{1, 2}}, Vector{0.5}};
  m.decoder[0] = Dense{Matrix{{2}, {-1}}, Vector{0, 1}};
  data::Dataset d{Matrix{{1, -0.25}, {-1, 0}}, {0, 1}, "hand"};
  const Vector e = reconstruction_errors(m, d, 1);
  CHECK(std::abs(e[0] - 0.53125) <= 1e-12);
  CHECK(std::abs(e[1] - 1.0) <= 1e-12);

  auto h = init_model(config(2, {1, 1}));
  h.encoder[0] = Dense{Matrix{{1, 2}}, Vector{0.5}};
  h.heads[0] = Dense{Matrix{{3}, {1}}, Vector{0, -1}};
  CHECK(std::abs(reconstruction_errors(h, d, 1)[0] - 2.03125) <= 1e-12);

  CHECK_THROWS_AS(reconstruction_errors(h, d, 0), ContractError);
  CHECK_THROWS_AS(reconstruction_errors(h, d, 3), ContractError);
}

TEST_CASE("exact reconstruction gives zero error") {
  auto m = init_model(config(2, {2}));
  m.encoder[0] = Dense{Matrix::identity(2), Vector{0, 0}};
  m.decoder[0] = Dense{Matrix::identity(2), Vector{0, 0}};
  data::Dataset d{Matrix{{1, 2}, {0.5, 3}}, {0, 1}, "id"};
  const Vector e = reconstruction_errors(m, d, 1);
  CHECK(e[0] == 0.0);
  CHECK(e[1] == 0.0);
}

TEST_CASE("errors are per-sample and nonnegative") {
  const auto m = init_model(config(6, {5, 3}));
  const data::Dataset d = data::generate_synthetic(6, 50, 0.1, 4);
  std::vector<std::size_t> perm(d.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const data::Dataset p = data::select_rows(d, perm);
  for (std::size_t exit = 1; exit <= 2; ++exit) {
    const Vector a = reconstruction_errors(m, d, exit);
    const Vector b = reconstruction_errors(m, p, exit);
    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(a[i] >= 0.0);
      CHECK(b[i] == a[perm[i]]);
      const std::vector<double> xs(d.features.row(i).begin(), d.features.row(i).end());
      CHECK(std::abs(a[i] - oracle::mse(oracle::forward(m, xs, exit), xs)) <= 1e-12);
    }
  }
}

TEST_CASE("training") {
  const auto all = data::generate_synthetic(8, 2000, 0.1, 11);
  const auto normals = data::filter_label(all, 0);

  SUBCASE("zero learning rate leaves the model unchanged") {
    auto cfg = config(8, {6, 4});
    cfg.learning_rate = 0.0;
    cfg.epochs = 3;
    auto m = init_model(cfg);
    const auto before = m;
    const auto rep = train(m, normals);
    CHECK(m == before);
    REQUIRE(rep.epoch_loss.size() == 3);
    CHECK(rep.epoch_loss[0] == rep.epoch_loss[2]);
    CHECK(rep.final_loss == rep.epoch_loss.back());
  }

  SUBCASE("loss decreases and runs are reproducible") {
    auto cfg = config(8, {6, 4});
    cfg.epochs = 50;
    auto m = init_model(cfg);
    const auto rep = train(m, normals);
    CHECK(rep.final_loss < rep.epoch_loss.front());
    m.check_invariants();
    auto again = init_model(cfg);
    train(again, normals);
    CHECK(serialize_model(again) == serialize_model(m));
  }

  SUBCASE("divergence is reported") {
    auto cfg = config(8, {6, 4});
    cfg.learning_rate = 1e6;
    cfg.momentum = 0.0;
    auto m = init_model(cfg);
    CHECK_THROWS_AS(train(m, normals), DivergenceError);
  }

  CHECK_THROWS_AS(
      [&] {
        auto m = init_model(config(5, {3}));
        train(m, normals);
      }(),
      ContractError);
}

TEST_CASE("nearest-rank quantile and thresholds") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  CHECK(nearest_rank_quantile(v, 0.95) == 95.0);
  CHECK(nearest_rank_quantile(v, 1.0) == 100.0);
  CHECK(nearest_rank_quantile(v, 0.0) == 1.0);
  CHECK(nearest_rank_quantile(std::vector<double>{10, 20, 30, 40}, 0.5) == 20.0);
  CHECK(nearest_rank_quantile(std::vector<double>(7, 2.5), 0.3) == 2.5);
  double prev = -1;
  for (double q = 0.05; q < 1.0; q += 0.05) {
    const double t = nearest_rank_quantile(v, q);
    CHECK(t >= prev);
    prev = t;
  }
  CHECK_THROWS_AS(nearest_rank_quantile(std::vector<double>{}, 0.5), ContractError);

  const auto m = init_model(config(4, {3}));
  const auto d = data::generate_synthetic(4, 40, 0.1, 2);
  const auto normals = data::filter_label(d, 0);
  CHECK_THROWS_AS(calibrate_final_threshold(m, normals, 0.0), ContractError);
  CHECK_THROWS_AS(calibrate_final_threshold(m, normals, 1.0), ContractError);
  const Vector e = reconstruction_errors(m, d, 1);
  const double mx = *std::max_element(e.values().begin(), e.values().end());
  const auto none = classify(m, d, mx);
  CHECK(std::count(none.begin(), none.end(), 1) == 0);
  const auto all = classify(m, d, 0.0);
  CHECK(static_cast<std::size_t>(std::count(all.begin(), all.end(), 1)) == d.size());
  CHECK_THROWS_AS(classify(m, d, -1.0), ContractError);
}

TEST_CASE("trained fixture separates anomalies") {
  // 10% anomalies: at a 0.95 normal quantile, a 2% rate would cap F1 near 0.45.
  const auto all = data::generate_synthetic(8, 5000, 0.1, 31);
  const auto [trainval, test] = data::split(all, 0.8, 1);
  const auto [train_set, calib] = data::split(trainval, 0.8, 2);
  auto cfg = config(8, {6, 4});
  cfg.epochs = 30;
  auto m = init_model(cfg);
  train(m, data::filter_label(train_set, 0));
  const double tau = calibrate_final_threshold(m, data::filter_label(calib, 0), 0.95);
  const auto pred = classify(m, test, tau);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    tp += pred[i] && test.labels[i];
    fp += pred[i] && !test.labels[i];
    fn += !pred[i] && test.labels[i];
  }
  const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  MESSAGE("fixture F1 = " << f1);
  CHECK(f1 > 0.6);
}

TEST_CASE("checkpoint round trip") {
  auto cfg = config(5, {4, 2});
  cfg.epochs = 7;
  cfg.learning_rate = 0.125;
  const auto m = init_model(cfg);
  const auto bytes = serialize_model(m);
  CHECK(deserialize_model(bytes) == m);

  const auto dir = oracle::temp_dir("ckpt");
  save_model(m, dir / "model.mosm");
  CHECK(load_model(dir / "model.mosm") == m);
  CHECK_THROWS_AS(load_model(dir / "absent.mosm"), IoError);
  std::filesystem::remove_all(dir);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_model(bad), FormatError);
  try {
    deserialize_model(bad);
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatErrorKind::bad_magic);
  }
  auto ver = bytes;
  ver[4] = 9;
  try {
    deserialize_model(ver);
    FAIL("expected version error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatErrorKind::unsupported_version);
  }
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 1);
  try {
    deserialize_model(cut);
    FAIL("expected truncation error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatErrorKind::truncated);
  }

  const auto rebuilt = model_from_matrices(parameter_matrices(m), cfg);
  CHECK(rebuilt == m);
}
