// SPDX-License-Identifier: Apache-2.0
#include "mosae/sae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <string>

#include "mosae/bytes.hpp"
#include "mosae/error.hpp"
#include "mosae/kernels.hpp"

namespace mosae::sae {
namespace {

constexpr char kMagic[4] = {'M', 'O', 'S', 'M'};
constexpr std::uint8_t kVersion = 1;

// Output width of decoder layer j (0-based) and the encoder layer its hidden
// output mirrors.
std::size_t decoder_out(const SaeConfig& c, std::size_t j) {
  const std::size_t L = c.depth();
  return j + 1 == L ? c.input_dim : c.encoder_widths[L - 2 - j];
}
std::size_t decoder_in(const SaeConfig& c, std::size_t j) {
  return c.encoder_widths[c.depth() - 1 - j];
}
std::size_t mirror_of(std::size_t L, std::size_t j) { return L - 2 - j; }

Dense make_dense(std::size_t out, std::size_t in, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-a, a);
  std::vector<double> w(out * in);
  for (double& v : w) v = u(rng);
  return Dense{Matrix(out, in, std::move(w)), Vector(out)};
}

void relu(std::span<double> a) {
  for (double& v : a) v = v > 0.0 ? v : 0.0;
}

void gemv(const Dense& l, std::span<const double> in, std::span<double> out) {
  kernels::active().gemv(l.weight.span().data(), l.weight.rows(), l.weight.cols(), in.data(),
                         l.bias.span().data(), out.data());
}

void outer_acc(Dense& g, std::span<const double> delta, std::span<const double> in) {
  for (std::size_t r = 0; r < delta.size(); ++r) {
    if (delta[r] == 0.0) continue;
    kernels::axpy(delta[r], in, g.weight.row(r));
    g.bias[r] += delta[r];
  }
}

void transposed_into(const Dense& l, std::span<const double> delta, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  kernels::active().gemv_t_acc(l.weight.span().data(), l.weight.rows(), l.weight.cols(),
                               delta.data(), out.data());
}

void check_dense(const Dense& l, std::size_t out, std::size_t in, const char* what) {
  if (l.weight.rows() != out || l.weight.cols() != in || l.bias.size() != out) {
    throw ContractError(std::string("SaeModel: ") + what + " has wrong shape");
  }
  if (!l.weight.all_finite()) throw ContractError(std::string("SaeModel: ") + what + " non-finite");
}

}  // namespace

void SaeConfig::validate() const {
  if (input_dim < 1) throw ContractError("SaeConfig: input_dim must be >= 1");
  if (encoder_widths.empty()) throw ContractError("SaeConfig: need at least one encoder layer");
  for (auto w : encoder_widths) {
    if (w < 1) throw ContractError("SaeConfig: widths must be >= 1");
  }
  if (epochs < 1) throw ContractError("SaeConfig: epochs must be >= 1");
  if (batch_size < 1) throw ContractError("SaeConfig: batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ContractError("SaeConfig: learning_rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("SaeConfig: momentum must lie in [0,1)");
}

std::size_t SaeModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for_each_dense(*this, [&](const Dense& l) { n += l.weight.size() + l.bias.size(); });
  return n;
}

void SaeModel::check_invariants() const {
  config.validate();
  const std::size_t L = config.depth();
  if (encoder.size() != L || decoder.size() != L || heads.size() != L - 1) {
    throw ContractError("SaeModel: layer counts disagree with config");
  }
  const auto& w = config.encoder_widths;
  for (std::size_t k = 0; k < L; ++k) {
    check_dense(encoder[k], w[k], k == 0 ? config.input_dim : w[k - 1], "encoder layer");
    check_dense(decoder[k], decoder_out(config, k), decoder_in(config, k), "decoder layer");
    if (k + 1 < L) check_dense(heads[k], config.input_dim, w[k], "exit head");
  }
}

SaeModel init_model(const SaeConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SaeModel m{cfg, {}, {}, {}};
  const std::size_t L = cfg.depth();
  for (std::size_t k = 0; k < L; ++k) {
    m.encoder.push_back(make_dense(cfg.encoder_widths[k], k == 0 ? cfg.input_dim : cfg.encoder_widths[k - 1], rng));
  }
  for (std::size_t j = 0; j < L; ++j) {
    m.decoder.push_back(make_dense(decoder_out(cfg, j), decoder_in(cfg, j), rng));
  }
  for (std::size_t k = 0; k + 1 < L; ++k) {
    m.heads.push_back(make_dense(cfg.input_dim, cfg.encoder_widths[k], rng));
  }
  return m;
}

SaeModel zeros_like(const SaeModel& m) {
  SaeModel z = m;
  for_each_dense(z, [](Dense& l) {
    std::fill(l.weight.span().begin(), l.weight.span().end(), 0.0);
    std::fill(l.bias.span().begin(), l.bias.span().end(), 0.0);
  });
  return z;
}

double loss_and_gradient(const SaeModel& model, const Matrix& x,
                         std::span<const std::size_t> rows, SaeModel& grad,
                         std::span<double> per_sample) {
  const std::size_t L = model.depth();
  const std::size_t d = model.input_dim();
  const auto& widths = model.config.encoder_widths;
  if (x.cols() != d) throw ContractError("loss_and_gradient: input dimension mismatch");
  if (rows.empty()) throw ContractError("loss_and_gradient: empty batch");

  const double batch = static_cast<double>(rows.size());
  const double dd = static_cast<double>(d);

  std::vector<std::vector<double>> z(L), a(L), da(L), head_r(L > 0 ? L - 1 : 0);
  for (std::size_t k = 0; k < L; ++k) {
    z[k].resize(widths[k]);
    a[k].resize(widths[k]);
    da[k].resize(widths[k]);
  }
  for (auto& r : head_r) r.resize(d);
  std::vector<std::vector<double>> dec_y(L);
  for (std::size_t j = 0; j < L; ++j) dec_y[j].resize(decoder_out(model.config, j));
  std::vector<std::vector<double>> dec_g(L > 0 ? L - 1 : 0);
  for (std::size_t j = 0; j + 1 < L; ++j) dec_g[j].resize(dec_y[j].size());

  std::vector<double> delta, delta_in, dr(d);

  double total = 0.0;
  for (std::size_t s = 0; s < rows.size(); ++s) {
    const auto xs = x.row(rows[s]);

    // Forward.
    for (std::size_t k = 0; k < L; ++k) {
      gemv(model.encoder[k], k == 0 ? xs : std::span<const double>(a[k - 1]), z[k]);
      for (std::size_t i = 0; i < z[k].size(); ++i) a[k][i] = z[k][i] > 0.0 ? z[k][i] : 0.0;
    }
    double loss = 0.0;
    for (std::size_t k = 0; k + 1 < L; ++k) {
      gemv(model.heads[k], a[k], head_r[k]);
      loss += kernels::sq_dist(head_r[k], xs) / dd;
    }
    for (std::size_t j = 0; j < L; ++j) {
      const std::span<const double> in = j == 0 ? std::span<const double>(a[L - 1]) : dec_g[j - 1];
      gemv(model.decoder[j], in, dec_y[j]);
      if (j + 1 < L) {
        for (std::size_t i = 0; i < dec_y[j].size(); ++i) dec_g[j][i] = dec_y[j][i] > 0.0 ? dec_y[j][i] : 0.0;
      }
    }
    loss += kernels::sq_dist(dec_y[L - 1], xs) / dd;
    if (!per_sample.empty()) per_sample[s] = loss;
    total += loss;

    // Backward through the decoder.
    const double coef = 2.0 / (dd * batch);
    delta.resize(d);
    for (std::size_t i = 0; i < d; ++i) delta[i] = coef * (dec_y[L - 1][i] - xs[i]);
    for (std::size_t j = L; j-- > 0;) {
      const std::span<const double> in = j == 0 ? std::span<const double>(a[L - 1]) : dec_g[j - 1];
      outer_acc(grad.decoder[j], delta, in);
      delta_in.resize(in.size());
      transposed_into(model.decoder[j], delta, delta_in);
      if (j > 0) {
        for (std::size_t i = 0; i < delta_in.size(); ++i) {
          if (!(dec_y[j - 1][i] > 0.0)) delta_in[i] = 0.0;
        }
        delta.swap(delta_in);
      } else {
        std::copy(delta_in.begin(), delta_in.end(), da[L - 1].begin());
      }
    }

    // Backward through heads and encoder.
    for (std::size_t k = L; k-- > 0;) {
      if (k + 1 < L) {
        for (std::size_t i = 0; i < d; ++i) dr[i] = coef * (head_r[k][i] - xs[i]);
        outer_acc(grad.heads[k], dr, a[k]);
        kernels::active().gemv_t_acc(model.heads[k].weight.span().data(), d, widths[k], dr.data(),
                                     da[k].data());
      }
      for (std::size_t i = 0; i < da[k].size(); ++i) {
        if (!(z[k][i] > 0.0)) da[k][i] = 0.0;
      }
      outer_acc(grad.encoder[k], da[k], k == 0 ? xs : std::span<const double>(a[k - 1]));
      if (k > 0) transposed_into(model.encoder[k], da[k], da[k - 1]);
    }
  }
  return total / batch;
}

TrainReport train(SaeModel& model, const data::Dataset& normals) {
  const auto& cfg = model.config;
  cfg.validate();
  if (normals.size() == 0) throw ContractError("train: empty dataset");
  if (normals.dims() != model.input_dim()) throw ContractError("train: dataset dimension mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = normals.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0xA5A5A5A5DEADBEEFull);

  SaeModel grad = zeros_like(model);
  SaeModel velocity = zeros_like(model);
  std::vector<double> sample_loss(n, 0.0);
  std::vector<double> batch_loss(cfg.batch_size);

  TrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      for_each_dense(grad, [](Dense& l) {
        std::fill(l.weight.span().begin(), l.weight.span().end(), 0.0);
        std::fill(l.bias.span().begin(), l.bias.span().end(), 0.0);
      });
      const double loss = loss_and_gradient(model, normals.features, rows, grad,
                                            std::span<double>(batch_loss.data(), len));
      if (!std::isfinite(loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                              ", batch starting at " + std::to_string(start));
      }
      for (std::size_t i = 0; i < len; ++i) sample_loss[rows[i]] = batch_loss[i];

      // v <- momentum * v - lr * g ; theta <- theta + v
      auto update = [&](std::span<double> p, std::span<double> v, std::span<const double> g) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          v[i] = cfg.momentum * v[i] - cfg.learning_rate * g[i];
          p[i] += v[i];
        }
      };
      auto step = [&](std::vector<Dense>& params, std::vector<Dense>& vel, const std::vector<Dense>& g) {
        for (std::size_t l = 0; l < params.size(); ++l) {
          update(params[l].weight.span(), vel[l].weight.span(), g[l].weight.span());
          update(params[l].bias.span(), vel[l].bias.span(), g[l].bias.span());
        }
      };
      step(model.encoder, velocity.encoder, grad.encoder);
      step(model.decoder, velocity.decoder, grad.decoder);
      step(model.heads, velocity.heads, grad.heads);
    }
    // Summed in row order so the value does not depend on the shuffle.
    double sum = 0.0;
    for (double v : sample_loss) sum += v;
    report.epoch_loss.push_back(sum / static_cast<double>(n));
  }
  report.final_loss = report.epoch_loss.back();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!std::isfinite(report.final_loss)) throw DivergenceError("train: non-finite final loss");
  return report;
}

// ---------------------------------------------------------------------------
// Inference

InferenceView::InferenceView(const SaeModel& model) : model_(&model) {}

InferenceView::InferenceView(const SaeModel& model, std::vector<std::vector<double>> gates)
    : model_(&model), gates_(std::move(gates)) {
  const auto& w = model.config.encoder_widths;
  if (gates_.size() != w.size()) throw ContractError("InferenceView: gate layer count mismatch");
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (gates_[k].size() != w[k]) throw ContractError("InferenceView: gate width mismatch");
  }
}

InferenceView::Workspace InferenceView::make_workspace() const {
  Workspace ws;
  std::size_t widest = input_dim();
  for (auto w : model_->config.encoder_widths) {
    ws.enc.emplace_back(w);
    widest = std::max(widest, w);
  }
  ws.ping.resize(widest);
  ws.pong.resize(widest);
  ws.recon.resize(input_dim());
  return ws;
}

void InferenceView::gate(std::size_t layer, std::span<double> a) const {
  if (gates_.empty()) return;
  const auto& g = gates_[layer];
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= g[i];
}

void InferenceView::encode_layer(Workspace& ws, std::span<const double> x, std::size_t k) const {
  const std::span<const double> in = k == 0 ? x : std::span<const double>(ws.enc[k - 1]);
  gemv(model_->encoder[k], in, ws.enc[k]);
  relu(ws.enc[k]);
  gate(k, ws.enc[k]);
}

double InferenceView::head_error(Workspace& ws, std::span<const double> x, std::size_t k) const {
  gemv(model_->heads[k], ws.enc[k], ws.recon);
  return kernels::sq_dist(ws.recon, x) / static_cast<double>(input_dim());
}

double InferenceView::final_error(Workspace& ws, std::span<const double> x) const {
  const std::size_t L = depth();
  std::span<const double> cur = ws.enc[L - 1];
  for (std::size_t j = 0; j < L; ++j) {
    const Dense& l = model_->decoder[j];
    if (j + 1 == L) {
      gemv(l, cur, ws.recon);
    } else {
      std::span<double> out((j % 2 == 0 ? ws.ping : ws.pong).data(), l.out_dim());
      gemv(l, cur, out);
      relu(out);
      gate(mirror_of(L, j), out);
      cur = out;
    }
  }
  return kernels::sq_dist(ws.recon, x) / static_cast<double>(input_dim());
}

void InferenceView::reconstruct(std::span<const double> x, std::size_t exit,
                                std::span<double> out) const {
  const std::size_t L = depth();
  if (exit < 1 || exit > L) throw ContractError("reconstruct: exit out of range");
  if (x.size() != input_dim() || out.size() != input_dim()) {
    throw ContractError("reconstruct: dimension mismatch");
  }
  auto ws = make_workspace();
  for (std::size_t k = 0; k < exit; ++k) encode_layer(ws, x, k);
  if (exit < L) {
    head_error(ws, x, exit - 1);
  } else {
    final_error(ws, x);
  }
  std::copy(ws.recon.begin(), ws.recon.end(), out.begin());
}

Vector InferenceView::errors(const data::Dataset& d, std::size_t exit) const {
  const std::size_t L = depth();
  if (exit < 1 || exit > L) throw ContractError("reconstruction_errors: exit out of range");
  if (d.dims() != input_dim()) throw ContractError("reconstruction_errors: dimension mismatch");
  auto ws = make_workspace();
  std::vector<double> out(d.size());
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto x = d.features.row(r);
    for (std::size_t k = 0; k < exit; ++k) encode_layer(ws, x, k);
    out[r] = exit < L ? head_error(ws, x, exit - 1) : final_error(ws, x);
  }
  return Vector(std::move(out));
}

std::vector<Vector> InferenceView::all_exit_errors(const data::Dataset& d) const {
  const std::size_t L = depth();
  if (d.dims() != input_dim()) throw ContractError("all_exit_errors: dimension mismatch");
  auto ws = make_workspace();
  std::vector<std::vector<double>> out(L, std::vector<double>(d.size()));
  for (std::size_t r = 0; r < d.size(); ++r) {
    const auto x = d.features.row(r);
    for (std::size_t k = 0; k < L; ++k) {
      encode_layer(ws, x, k);
      if (k + 1 < L) out[k][r] = head_error(ws, x, k);
    }
    out[L - 1][r] = final_error(ws, x);
  }
  std::vector<Vector> res;
  res.reserve(L);
  for (auto& v : out) res.emplace_back(std::move(v));
  return res;
}

Vector reconstruction_errors(const SaeModel& model, const data::Dataset& d, std::size_t exit) {
  return InferenceView(model).errors(d, exit);
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ContractError("nearest_rank_quantile: empty input");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractError("nearest_rank_quantile: q must lie in [0,1]");
  std::vector<double> v(values.begin(), values.end());
  const double n = static_cast<double>(v.size());
  // The epsilon absorbs representation error in q (0.07 * 100 = 7.000000000000001).
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9 * std::max(1.0, q * n)));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
  return v[rank - 1];
}

double calibrate_final_threshold(const InferenceView& view, const data::Dataset& normals, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ContractError("calibrate_final_threshold: q must lie in (0,1)");
  if (normals.size() == 0) throw ContractError("calibrate_final_threshold: empty calibration set");
  const Vector e = view.errors(normals, view.depth());
  return nearest_rank_quantile(e.span(), q);
}

double calibrate_final_threshold(const SaeModel& model, const data::Dataset& normals, double q) {
  return calibrate_final_threshold(InferenceView(model), normals, q);
}

std::vector<std::uint8_t> classify(const InferenceView& view, const data::Dataset& d,
                                   double threshold) {
  if (!(threshold >= 0.0)) throw ContractError("classify: threshold must be >= 0");
  const Vector e = view.errors(d, view.depth());
  std::vector<std::uint8_t> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = e[i] > threshold ? 1 : 0;
  return out;
}

std::vector<std::uint8_t> classify(const SaeModel& model, const data::Dataset& d, double threshold) {
  return classify(InferenceView(model), d, threshold);
}

// ---------------------------------------------------------------------------
// Checkpoints

std::vector<Matrix> parameter_matrices(const SaeModel& m) {
  std::vector<Matrix> out;
  for_each_dense(m, [&](const Dense& l) {
    out.push_back(l.weight);
    out.emplace_back(l.bias.size(), 1, l.bias.values());
  });
  return out;
}

SaeModel model_from_matrices(const std::vector<Matrix>& mats, const SaeConfig& training) {
  if (mats.size() < 4 || (mats.size() + 2) % 6 != 0) {
    throw ContractError("model_from_matrices: matrix count does not match any depth");
  }
  const std::size_t L = (mats.size() + 2) / 6;
  SaeConfig cfg = training;
  cfg.input_dim = mats[0].cols();
  cfg.encoder_widths.clear();
  for (std::size_t k = 0; k < L; ++k) cfg.encoder_widths.push_back(mats[2 * k].rows());

  SaeModel m{cfg, {}, {}, {}};
  std::size_t idx = 0;
  auto take = [&](std::vector<Dense>& dst, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, idx += 2) {
      const Matrix& b = mats[idx + 1];
      if (b.cols() != 1) throw ContractError("model_from_matrices: bias block must be a column");
      dst.push_back(Dense{mats[idx], Vector(b.values())});
    }
  };
  take(m.encoder, L);
  take(m.decoder, L);
  take(m.heads, L - 1);
  m.check_invariants();
  return m;
}

std::vector<std::uint8_t> serialize_model(const SaeModel& m) {
  m.check_invariants();
  bytes::Writer w;
  w.raw({reinterpret_cast<const std::uint8_t*>(kMagic), 4});
  w.u8(kVersion);
  const auto& c = m.config;
  w.u32(static_cast<std::uint32_t>(c.input_dim));
  w.u32(static_cast<std::uint32_t>(c.depth()));
  for (auto width : c.encoder_widths) w.u32(static_cast<std::uint32_t>(width));
  w.u8(static_cast<std::uint8_t>(c.activation));
  w.u32(static_cast<std::uint32_t>(c.epochs));
  w.u32(static_cast<std::uint32_t>(c.batch_size));
  w.f64(c.learning_rate);
  w.f64(c.momentum);
  w.u64(c.seed);
  for (const Matrix& mat : parameter_matrices(m)) {
    w.u32(static_cast<std::uint32_t>(mat.rows()));
    w.u32(static_cast<std::uint32_t>(mat.cols()));
    for (double v : mat.span()) w.f64(v);
  }
  return w.take();
}

SaeModel deserialize_model(std::span<const std::uint8_t> data) {
  bytes::Reader r(data);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError(FormatErrorKind::bad_magic, "checkpoint: bad magic");
  }
  if (const auto v = r.u8(); v != kVersion) {
    throw FormatError(FormatErrorKind::unsupported_version,
                      "checkpoint: unsupported version " + std::to_string(v));
  }
  SaeConfig c;
  c.input_dim = r.u32();
  const std::uint32_t depth = r.u32();
  if (depth == 0 || depth > 4096) throw FormatError(FormatErrorKind::malformed, "checkpoint: bad depth");
  for (std::uint32_t k = 0; k < depth; ++k) c.encoder_widths.push_back(r.u32());
  const auto act = r.u8();
  if (act != static_cast<std::uint8_t>(Activation::relu)) {
    throw FormatError(FormatErrorKind::malformed, "checkpoint: unknown activation");
  }
  c.epochs = r.u32();
  c.batch_size = r.u32();
  c.learning_rate = r.f64();
  c.momentum = r.f64();
  c.seed = r.u64();

  std::vector<Matrix> mats;
  const std::size_t count = 6 * depth - 2;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t rows = r.u32();
    const std::size_t cols = r.u32();
    if (rows == 0 || cols == 0) throw FormatError(FormatErrorKind::malformed, "checkpoint: empty matrix");
    if (rows * cols > r.remaining() / 8) {
      throw FormatError(FormatErrorKind::truncated, "checkpoint: truncated matrix data");
    }
    std::vector<double> v(rows * cols);
    for (double& x : v) x = r.f64();
    try {
      mats.emplace_back(rows, cols, std::move(v));
    } catch (const ContractError& e) {
      throw FormatError(FormatErrorKind::malformed, std::string("checkpoint: ") + e.what());
    }
  }
  if (r.remaining() != 0) throw FormatError(FormatErrorKind::malformed, "checkpoint: trailing bytes");
  SaeModel m;
  try {
    m = model_from_matrices(mats, c);
  } catch (const ContractError& e) {
    throw FormatError(FormatErrorKind::malformed, std::string("checkpoint: ") + e.what());
  }
  if (!(m.config == c)) throw FormatError(FormatErrorKind::malformed, "checkpoint: shapes disagree with config");
  return m;
}

void save_model(const SaeModel& m, const std::filesystem::path& path) {
  const auto buf = serialize_model(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

SaeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(buf);
}

}  // namespace mosae::sae
