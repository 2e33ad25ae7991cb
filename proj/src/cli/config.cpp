// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>
#include <toml.hpp>

#include "mosae/cli.hpp"
#include "mosae/error.hpp"

namespace mosae::cli {
namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const toml::node& n, const std::string& msg) const {
    throw ParseError(source_, static_cast<std::size_t>(n.source().begin.line), msg);
  }

  template <class T>
  T get(const toml::node& n, const std::string& key) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n.value_exact<bool>()) return *v;
      fail(n, key + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n.value_exact<std::string>()) return *v;
      fail(n, key + ": expected a string");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (auto v = n.value<double>()) return *v;
      fail(n, key + ": expected a number");
    } else {
      auto v = n.value_exact<std::int64_t>();
      if (!v) fail(n, key + ": expected an integer");
      if (*v < 0) fail(n, key + ": must be non-negative");
      return static_cast<T>(*v);
    }
  }

  template <class T>
  std::vector<T> list(const toml::node& n, const std::string& key) const {
    const auto* arr = n.as_array();
    if (!arr) fail(n, key + ": expected an array");
    std::vector<T> out;
    for (const auto& e : *arr) out.push_back(get<T>(e, key));
    return out;
  }

 private:
  std::string source_;
};

void read_data(const Reader& r, const toml::table& t, DataConfig& d) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (key == "source") {
      const auto s = r.get<std::string>(v, key);
      if (s == "synthetic") d.source = DataSource::synthetic;
      else if (s == "csv") d.source = DataSource::csv;
      else if (s == "smd") d.source = DataSource::smd;
      else r.fail(v, "data.source must be synthetic, csv or smd");
    } else if (key == "path") {
      d.path = r.get<std::string>(v, key);
    } else if (key == "label_column") {
      if (v.is_integer()) d.label_column = "#" + std::to_string(r.get<std::size_t>(v, key));
      else d.label_column = r.get<std::string>(v, key);
    } else if (key == "smd_name") {
      d.smd_name = r.get<std::string>(v, key);
    } else if (key == "dims") {
      d.dims = r.get<std::size_t>(v, key);
    } else if (key == "samples") {
      d.samples = r.get<std::size_t>(v, key);
    } else if (key == "anomaly_rate") {
      d.anomaly_rate = r.get<double>(v, key);
    } else if (key == "seed") {
      d.seed = r.get<std::uint64_t>(v, key);
    } else if (key == "split_seed") {
      d.split_seed = r.get<std::uint64_t>(v, key);
    } else if (key == "standardize") {
      d.standardize = r.get<bool>(v, key);
    } else {
      r.fail(v, "unknown key data." + key);
    }
  }
}

void read_sae(const Reader& r, const toml::table& t, sae::SaeConfig& c) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (key == "widths") c.encoder_widths = r.list<std::size_t>(v, key);
    else if (key == "epochs") c.epochs = r.get<std::size_t>(v, key);
    else if (key == "batch_size") c.batch_size = r.get<std::size_t>(v, key);
    else if (key == "learning_rate") c.learning_rate = r.get<double>(v, key);
    else if (key == "momentum") c.momentum = r.get<double>(v, key);
    else if (key == "seed") c.seed = r.get<std::uint64_t>(v, key);
    else r.fail(v, "unknown key sae." + key);
  }
}

void read_ga(const Reader& r, const toml::table& t, moga::GaConfig& g) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (key == "population") g.population = r.get<std::size_t>(v, key);
    else if (key == "generations") g.generations = r.get<std::size_t>(v, key);
    else if (key == "crossover_rate") g.crossover_rate = r.get<double>(v, key);
    else if (key == "mutation_rate") g.mutation_rate = r.get<double>(v, key);
    else if (key == "elitism") g.elitism = r.get<std::size_t>(v, key);
    else if (key == "seed") g.seed = r.get<std::uint64_t>(v, key);
    else if (key == "runtime") {
      const auto s = r.get<std::string>(v, key);
      if (s == "opcount") g.runtime = moga::RuntimeObjective::opcount;
      else if (s == "wallclock") g.runtime = moga::RuntimeObjective::wallclock;
      else r.fail(v, "ga.runtime must be opcount or wallclock");
    } else {
      r.fail(v, "unknown key ga." + key);
    }
  }
}

void read_run(const Reader& r, const toml::table& t, RunConfig& c) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (key == "mode") {
      try {
        c.mode = moga::parse_mode(r.get<std::string>(v, key));
      } catch (const ContractError& e) {
        r.fail(v, e.what());
      }
    } else if (key == "out") {
      c.out = r.get<std::string>(v, key);
    } else if (key == "model") {
      c.model = r.get<std::string>(v, key);
    } else if (key == "payload") {
      c.payload = r.get<std::string>(v, key);
    } else if (key == "seed") {
      c.seed = r.get<std::uint64_t>(v, key);
    } else if (key == "density") {
      c.density = r.get<std::uint32_t>(v, key);
    } else if (key == "sweep") {
      c.sweep = r.list<std::uint32_t>(v, key);
    } else if (key == "timing_reps") {
      c.timing_reps = r.get<std::size_t>(v, key);
    } else if (key == "final_quantile") {
      c.final_quantile = r.get<double>(v, key);
    } else if (key == "clip_step") {
      c.clip_step = r.get<double>(v, key);
    } else if (key == "rret_policies") {
      c.rret_policies = r.get<std::size_t>(v, key);
    } else if (key == "verify_instances") {
      c.verify_instances = r.get<std::size_t>(v, key);
    } else if (key == "verify_densities") {
      c.verify_densities = r.list<std::uint32_t>(v, key);
    } else {
      r.fail(v, "unknown key run." + key);
    }
  }
}

}  // namespace

std::filesystem::path RunConfig::model_path() const { return model ? *model : out / "model.mosm"; }
std::filesystem::path RunConfig::payload_path() const { return payload ? *payload : out / "update.mosu"; }

void RunConfig::validate() const {
  if (data.source == DataSource::synthetic) {
    if (data.dims == 0 || data.samples < 10) throw ContractError("data: synthetic needs dims >= 1 and samples >= 10");
    if (!(data.anomaly_rate > 0.0 && data.anomaly_rate < 1.0)) {
      throw ContractError("data.anomaly_rate must lie in (0, 1)");
    }
  } else if (data.path.empty()) {
    throw ContractError("data.path is required for csv and smd sources");
  }
  if (data.source == DataSource::smd && data.smd_name.empty()) throw ContractError("data.smd_name is required");
  if (sae.encoder_widths.empty()) throw ContractError("sae.widths must not be empty");
  ga.validate();
  if (density < 2) throw ContractError("run.density must be >= 2");
  if (sweep.empty()) throw ContractError("run.sweep must not be empty");
  for (auto d : sweep) {
    if (d < 2) throw ContractError("run.sweep densities must be >= 2");
  }
  for (auto d : verify_densities) {
    if (d < 2) throw ContractError("run.verify_densities must be >= 2");
  }
  if (timing_reps != 0 && (timing_reps < 3 || timing_reps % 2 == 0)) {
    throw ContractError("run.timing_reps must be 0 or an odd number >= 3");
  }
  if (!(final_quantile > 0.0 && final_quantile < 1.0)) throw ContractError("run.final_quantile must lie in (0, 1)");
  if (!(clip_step > 0.0 && clip_step <= 0.5)) throw ContractError("run.clip_step must lie in (0, 0.5]");
  if (rret_policies == 0) throw ContractError("run.rret_policies must be positive");
}

RunConfig default_config() {
  RunConfig c;
  c.sae.encoder_widths = {16, 12, 8};
  c.sae.epochs = 20;
  c.sae.batch_size = 64;
  c.sae.learning_rate = 0.01;
  c.sae.momentum = 0.9;
  return c;
}

RunConfig parse_config(const std::string& toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(source, static_cast<std::size_t>(e.source().begin.line), std::string(e.description()));
  }
  const Reader r(source);
  RunConfig c = default_config();
  for (const auto& [k, v] : root) {
    const std::string key(k.str());
    const auto* t = v.as_table();
    if (!t) r.fail(v, "top-level key " + key + " must be a table");
    if (key == "data") read_data(r, *t, c.data);
    else if (key == "sae") read_sae(r, *t, c.sae);
    else if (key == "ga") read_ga(r, *t, c.ga);
    else if (key == "run") read_run(r, *t, c);
    else r.fail(v, "unknown section [" + key + "]");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.sae.seed = seed;
  cfg.ga.seed = seed;
}

}  // namespace mosae::cli
