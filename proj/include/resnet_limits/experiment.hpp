#pragma once

// Experiment driver behind the command-line tool: a serializable spec, one
// runner per command, and the self-describing output files.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "resnet_limits/config.hpp"
#include "resnet_limits/density.hpp"
#include "resnet_limits/errors.hpp"
#include "resnet_limits/estimate.hpp"
#include "resnet_limits/simulate.hpp"
#include "resnet_limits/theory.hpp"
#include "resnet_limits/version.hpp"

namespace resnet_limits {

using json = nlohmann::json;

enum class Command { Predict, SampleG, Density, Conjecture, Correlation, EstimateC, Sweep };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::Predict: return "predict";
    case Command::SampleG: return "sample-g";
    case Command::Density: return "density";
    case Command::Conjecture: return "conjecture";
    case Command::Correlation: return "correlation";
    case Command::EstimateC: return "estimate-c";
    case Command::Sweep: return "sweep";
  }
  return "?";
}

inline Command parse_command(std::string_view s) {
  for (Command c : {Command::Predict, Command::SampleG, Command::Density, Command::Conjecture,
                    Command::Correlation, Command::EstimateC, Command::Sweep}) {
    if (s == to_string(c)) return c;
  }
  throw ValidationError("unknown command '" + std::string(s) + "'");
}

enum class Format { Csv, Json };

inline std::string_view to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ValidationError("unknown format '" + std::string(s) + "'");
}

/// Decimal number or the token 1/sqrt2.
inline double parse_coefficient(std::string_view s) {
  if (s == "1/sqrt2" || s == "1/sqrt(2)") return detail::kInvSqrt2;
  std::string str(s);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(str, &pos);
  } catch (const std::exception&) {
    throw ValidationError("cannot parse coefficient '" + str + "'");
  }
  if (pos != str.size()) throw ValidationError("cannot parse coefficient '" + str + "'");
  return v;
}

inline std::vector<double> parse_list(std::string_view s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is{std::string(s)};
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(parse_coefficient(item));
  }
  return out;
}

struct CommandOptions {
  std::optional<double> hypo_c;    // fixed C instead of re-estimating it
  std::string simulator = "chain";  // density: chain | full
  double bin_width = 0.25;          // density: empirical histogram bin width
  double grid_step = 0.01;          // density: grid step
  std::size_t max_lag = 2;          // conjecture
  std::vector<double> ratios = {0.1, 0.5, 1.0};  // correlation: d/n grid
  std::string axis = "n";           // sweep: n | d | ratio | lambda2
  std::vector<double> values;       // sweep
  std::optional<double> fix_ratio;  // sweep over n: d = round(fix_ratio * n)

  bool operator==(const CommandOptions&) const = default;
};

struct ExperimentSpec {
  Command command = Command::Predict;
  NetConfig config;
  std::size_t n_samples = 10000;
  std::size_t workers = default_workers();
  std::string output_path;  // empty or "-" writes single-file outputs to stdout
  Format format = Format::Csv;
  CommandOptions options;

  bool operator==(const ExperimentSpec&) const = default;
};

// ---------------------------------------------------------------------------
// JSON round trip

inline json config_to_json(const NetConfig& c) {
  json j;
  j["n_in"] = c.n_in;
  j["n_out"] = c.n_out;
  j["n"] = c.n;
  j["d"] = c.d;
  if (c.is_constant() && c.d > 0) {
    j["alpha"] = c.alphas.front();
    j["lambda"] = c.lambdas.front();
  } else {
    j["alphas"] = c.alphas;
    j["lambdas"] = c.lambdas;
  }
  j["scheme"] = std::string(to_string(c.scheme));
  j["seed"] = c.seed;
  return j;
}

inline double json_coefficient(const json& v) {
  if (v.is_string()) return parse_coefficient(v.get<std::string>());
  if (v.is_number()) return v.get<double>();
  throw ValidationError("coefficient must be a number or \"1/sqrt2\"");
}

inline NetConfig config_from_json(const json& j) {
  NetConfig c;
  c.n_in = j.value("n_in", std::size_t{10});
  c.n_out = j.value("n_out", std::size_t{10});
  c.n = j.value("n", std::size_t{100});
  c.d = j.value("d", std::size_t{100});
  c.scheme = parse_scheme(j.value("scheme", std::string("vanilla")));
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("alphas") || j.contains("lambdas")) {
    for (const auto& v : j.at("alphas")) c.alphas.push_back(json_coefficient(v));
    for (const auto& v : j.at("lambdas")) c.lambdas.push_back(json_coefficient(v));
  } else {
    const double a = j.contains("alpha") ? json_coefficient(j["alpha"]) : detail::kInvSqrt2;
    const double l = j.contains("lambda") ? json_coefficient(j["lambda"]) : detail::kInvSqrt2;
    c.alphas.assign(c.d, a);
    c.lambdas.assign(c.d, l);
  }
  return c;
}

// The output path is left out: it names where a result goes, not what it is.
inline json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["command"] = std::string(to_string(s.command));
  j["config"] = config_to_json(s.config);
  j["n_samples"] = s.n_samples;
  j["workers"] = s.workers;
  j["format"] = std::string(to_string(s.format));
  json o;
  o["hypo_c"] = s.options.hypo_c ? json(*s.options.hypo_c) : json(nullptr);
  o["simulator"] = s.options.simulator;
  o["bin_width"] = s.options.bin_width;
  o["grid_step"] = s.options.grid_step;
  o["max_lag"] = s.options.max_lag;
  o["ratios"] = s.options.ratios;
  o["axis"] = s.options.axis;
  o["values"] = s.options.values;
  o["fix_ratio"] = s.options.fix_ratio ? json(*s.options.fix_ratio) : json(nullptr);
  j["options"] = o;
  return j;
}

inline ExperimentSpec spec_from_json(const json& j) {
  try {
    ExperimentSpec s;
    s.command = parse_command(j.at("command").get<std::string>());
    s.config = config_from_json(j.value("config", json::object()));
    s.n_samples = j.value("n_samples", s.n_samples);
    s.workers = j.value("workers", s.workers);
    s.format = parse_format(j.value("format", std::string("csv")));
    s.output_path = j.value("output_path", std::string());
    const json o = j.value("options", json::object());
    if (o.contains("hypo_c") && !o["hypo_c"].is_null()) s.options.hypo_c = o["hypo_c"].get<double>();
    s.options.simulator = o.value("simulator", s.options.simulator);
    s.options.bin_width = o.value("bin_width", s.options.bin_width);
    s.options.grid_step = o.value("grid_step", s.options.grid_step);
    s.options.max_lag = o.value("max_lag", s.options.max_lag);
    if (o.contains("ratios")) {
      s.options.ratios.clear();
      for (const auto& v : o["ratios"]) s.options.ratios.push_back(json_coefficient(v));
    }
    s.options.axis = o.value("axis", s.options.axis);
    if (o.contains("values")) {
      for (const auto& v : o["values"]) s.options.values.push_back(json_coefficient(v));
    }
    if (o.contains("fix_ratio") && !o["fix_ratio"].is_null()) {
      s.options.fix_ratio = o["fix_ratio"].get<double>();
    }
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed spec: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation

inline void validate_spec(const ExperimentSpec& s) {
  s.config.validate();
  if (s.workers < 1) throw ValidationError("workers must be at least 1");
  const CommandOptions& o = s.options;
  const bool simulates = s.command != Command::Predict;
  if (simulates && s.n_samples < 2) throw ValidationError("n_samples must be at least 2");
  if (o.hypo_c && !std::isfinite(*o.hypo_c)) throw ValidationError("C must be finite");

  switch (s.command) {
    case Command::Predict:
      if (s.config.scheme == Scheme::Vanilla && !o.hypo_c &&
          !detail::is_fully_connected(s.config) && !detail::is_canonical_sqrt_half(s.config)) {
        throw ValidationError(
            "predict: vanilla networks away from alpha = lambda = 1/sqrt2 need --c");
      }
      break;
    case Command::SampleG:
      if (s.format == Format::Json) throw ValidationError("sample-g writes csv samples");
      break;
    case Command::Density:
      if (s.format == Format::Json) throw ValidationError("density writes csv grids");
      if (o.simulator != "chain" && o.simulator != "full") {
        throw ValidationError("density: simulator must be chain or full");
      }
      if (!(o.grid_step > 0.0) || !(o.bin_width >= o.grid_step)) {
        throw ValidationError("density: need 0 < grid step <= bin width");
      }
      if (s.n_samples < 100) throw ValidationError("density needs at least 100 samples");
      break;
    case Command::Conjecture:
      if (s.format == Format::Json) throw ValidationError("conjecture writes csv tables");
      if (s.n_samples < 1000) throw ValidationError("conjecture needs at least 1000 samples");
      if (s.config.n < 2 || s.config.d < 2) throw ValidationError("conjecture needs n, d >= 2");
      if (o.max_lag > 0 && s.config.scheme == Scheme::Vanilla && !s.config.is_constant()) {
        throw ValidationError("conjecture: lag covariances need constant coefficients");
      }
      break;
    case Command::Correlation:
      if (s.config.n_out < 2) throw ValidationError("correlation needs n_out >= 2");
      if (!s.config.is_constant()) throw ValidationError("correlation needs constant coefficients");
      if (o.ratios.empty()) throw ValidationError("correlation needs at least one d/n ratio");
      for (double r : o.ratios) {
        if (!(r >= 0.0) || !std::isfinite(r)) throw ValidationError("d/n ratios must be >= 0");
      }
      if (s.n_samples < 2 * kChunkSize) throw ValidationError("correlation needs >= 512 samples");
      break;
    case Command::EstimateC:
      check_c_config(s.config);
      break;
    case Command::Sweep: {
      if (!s.config.is_constant()) throw ValidationError("sweep needs constant coefficients");
      if (o.values.empty()) throw ValidationError("sweep needs --values");
      if (o.axis != "n" && o.axis != "d" && o.axis != "ratio" && o.axis != "lambda2") {
        throw ValidationError("sweep axis must be n, d, ratio or lambda2");
      }
      if (o.fix_ratio && o.axis != "n") throw ValidationError("--fix-ratio only applies to axis n");
      for (double v : o.values) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("sweep values must be >= 0");
        if ((o.axis == "n" || o.axis == "d") && v != std::floor(v)) {
          throw ValidationError("sweep over n or d needs integer values");
        }
        if (o.axis == "n" && v < 1.0) throw ValidationError("sweep: n must be positive");
        if (o.axis == "lambda2" && !(v > 0.0 && v <= 1.0)) {
          throw ValidationError("sweep: lambda2 must lie in (0, 1]");
        }
      }
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Output

inline std::string header_block(const ExperimentSpec& s) {
  std::string h;
  h += std::string(kSchemaLine) + "\n";
  h += "# command: " + std::string(to_string(s.command)) + "\n";
  h += "# version: " + std::string(kVersion) + "\n";
  h += "# spec: " + spec_to_json(s).dump() + "\n";
  return h;
}

inline json header_json(const ExperimentSpec& s) {
  json j;
  j["schema"] = std::string(kSchemaLine).substr(2);
  j["command"] = std::string(to_string(s.command));
  j["version"] = std::string(kVersion);
  j["spec"] = spec_to_json(s);
  return j;
}

/// Reads the spec embedded in an output file (CSV header or JSON "spec").
inline ExperimentSpec spec_from_output_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string first;
  std::getline(in, first);
  if (first == kSchemaLine) {
    std::string line;
    while (std::getline(in, line) && line.starts_with("# ")) {
      if (line.starts_with("# spec: ")) {
        try {
          return spec_from_json(json::parse(line.substr(8)));
        } catch (const json::parse_error& e) {
          throw ValidationError(std::string("malformed spec header: ") + e.what());
        }
      }
    }
    throw ValidationError("'" + path + "' has no spec line");
  }
  in.clear();
  in.seekg(0);
  try {
    const json j = json::parse(in);
    if (!j.contains("spec")) throw ValidationError("'" + path + "' has no embedded spec");
    return spec_from_json(j["spec"]);
  } catch (const json::parse_error&) {
    throw ValidationError("'" + path + "' is neither a v1 CSV nor a v1 JSON output");
  }
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  template <class... T>
  void row(const T&... values) {
    std::ostringstream os;
    os.precision(17);
    bool first = true;
    ((os << (first ? "" : ",") << values, first = false), ...);
    rows_.push_back(os.str());
  }

  void add_row(const std::vector<double>& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
    rows_.push_back(os.str());
  }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
    s += "\n";
    for (const auto& r : rows_) s += r + "\n";
    return s;
  }

  json to_json() const {
    json arr = json::array();
    for (const auto& r : rows_) {
      json obj = json::object();
      std::istringstream is(r);
      std::string cell;
      for (std::size_t i = 0; std::getline(is, cell, ','); ++i) {
        try {
          std::size_t pos = 0;
          const double v = std::stod(cell, &pos);
          obj[columns_[i]] = pos == cell.size() ? json(v) : json(cell);
        } catch (const std::exception&) {
          obj[columns_[i]] = cell;
        }
      }
      arr.push_back(obj);
    }
    return arr;
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

/// One named artifact of a run. Suffix is appended to the output prefix for
/// multi-file commands and empty for single-file ones.
struct Artifact {
  std::string suffix;
  std::string content;
};

inline std::string json_text(const ExperimentSpec& s, json result) {
  json j = header_json(s);
  j["result"] = std::move(result);
  return j.dump(2) + "\n";
}

inline std::string table_text(const ExperimentSpec& s, const CsvTable& t) {
  if (s.format == Format::Json) return json_text(s, t.to_json());
  return header_block(s) + t.str();
}

// ---------------------------------------------------------------------------
// Runners

namespace detail {

inline HypoConstant hypo_for(const ExperimentSpec& s, const ChainAccumulator* acc) {
  if (s.options.hypo_c) return HypoConstant::estimated(*s.options.hypo_c, 0.0);
  if (acc) return c_estimates(*acc).full;
  return HypoConstant::paper_default();
}

inline std::string c_source(const ExperimentSpec& s, bool estimated) {
  if (s.config.scheme == Scheme::Balanced) return "none";
  if (s.options.hypo_c) return "given";
  return estimated ? "estimated" : "paper";
}

inline json prediction_json(const TheoryPrediction& p) {
  json j;
  j["mean_G"] = p.mean_G;
  j["var_G"] = p.var_G;
  j["beta"] = p.beta;
  j["c"] = std::isnan(p.c) ? json(nullptr) : json(p.c);
  j["h_total"] = p.h_total;
  j["i_total"] = p.i_total;
  j["prefactor_log"] = p.prefactor_log;
  return j;
}

inline std::vector<Artifact> run_predict(const ExperimentSpec& s) {
  const NetConfig& cfg = s.config;
  const bool uses_c = cfg.scheme == Scheme::Vanilla && !is_fully_connected(cfg);
  const HypoConstant C = uses_c ? hypo_for(s, nullptr) : HypoConstant::estimated(0.0, 0.0);
  const TheoryPrediction p = predict_G(cfg, C);
  const OutputStats o = predict_output_stats(cfg, p);
  json r = prediction_json(p);
  r["c_value"] = C.value;
  r["c_source"] = uses_c ? c_source(s, false) : "none";
  r["log_mean_sq"] = o.log_mean_sq;
  r["log_var_sq"] = o.log_var_sq;
  r["corr_sq"] = o.corr_sq;
  if (s.format == Format::Json) return {{"", json_text(s, r)}};
  CsvTable t({"field", "value"});
  for (const auto& [k, v] : r.items()) {
    if (v.is_number()) {
      t.row(k, v.get<double>());
    } else if (v.is_null()) {
      t.row(k, "nan");
    } else {
      t.row(k, v.get<std::string>());
    }
  }
  return {{"", header_block(s) + t.str()}};
}

inline std::vector<Artifact> run_sample_g(const ExperimentSpec& s) {
  const std::vector<double> g = sample_G(s.config, s.n_samples, s.workers);
  CsvTable samples({"index", "g"});
  for (std::size_t i = 0; i < g.size(); ++i) samples.row(i, g[i]);
  const MomentSummary m = summarize(g);
  CsvTable summary({"count", "mean", "mean_ci", "variance", "variance_ci", "m2"});
  summary.row(m.count, m.mean, m.ci_half_width(), m.variance(), m.variance_ci_half_width(), m.m2);
  return {{"_samples.csv", header_block(s) + samples.str()},
          {"_summary.csv", header_block(s) + summary.str()}};
}

inline std::vector<Artifact> run_density(const ExperimentSpec& s) {
  const NetConfig& cfg = s.config;
  const double norm = 1.0 / static_cast<double>(cfg.n_in);  // unit input
  const ChainRun run = run_chain(cfg, s.n_samples, ChainRunOptions{s.workers, 0, norm});
  std::vector<double> samples = run.log_output;
  if (s.options.simulator == "full") {
    std::vector<double> x(cfg.n_in, 0.0);
    x[0] = 1.0;
    samples = sample_log_output_full(cfg, x, s.n_samples, s.workers);
  }
  const TheoryPrediction pred = predict_G(cfg, hypo_for(s, &run.total));
  const double step = s.options.grid_step;
  GridSpec grid = default_grid(pred, cfg.n_out, norm, step);
  const double iw_mu = log_chi2_mean(cfg.n_out) - std::log(static_cast<double>(cfg.n_in));
  const double iw_sd = std::sqrt(log_chi2_variance(cfg.n_out));
  grid.x_min = std::min(grid.x_min, std::floor((iw_mu - 10.0 * iw_sd) / step) * step);
  grid.x_max = std::max(grid.x_max, std::ceil((iw_mu + 10.0 * iw_sd) / step) * step);

  const DensityGrid theory = predicted_logout_density(cfg, pred, norm, grid);
  const DensityGrid iw = infinite_width_logout_density(cfg.n_in, cfg.n_out, grid);
  const auto bin_steps =
      static_cast<std::size_t>(std::max(1.0, std::round(s.options.bin_width / step)));
  const double width = step * static_cast<double>(bin_steps);
  const GridSpec hist_grid{grid.x_min + 0.5 * width,
                           grid.x_min + 0.5 * width +
                               width * std::floor((grid.x_max - grid.x_min) / width - 1.0),
                           width};
  const DensityGrid empirical = histogram(samples, hist_grid);

  auto grid_text = [&](const DensityGrid& g) {
    std::ostringstream os;
    os << header_block(s);
    g.write_csv(os);
    return os.str();
  };
  CsvTable summary({"curve", "binned_iad", "mean"});
  summary.row("theory", binned_iad(samples, theory, bin_steps), theory.mean());
  summary.row("infinite_width", binned_iad(samples, iw, bin_steps), iw.mean());
  summary.row("empirical", 0.0, summarize(samples).mean);
  return {{"_theory.csv", grid_text(theory)},
          {"_infinite_width.csv", grid_text(iw)},
          {"_empirical.csv", grid_text(empirical)},
          {"_summary.csv", header_block(s) + summary.str()}};
}

inline std::vector<Artifact> run_conjecture(const ExperimentSpec& s) {
  const NetConfig& cfg = s.config;
  const LayerStats st = conjecture_stats(cfg, s.n_samples, s.workers, s.options.max_lag);
  CsvTable layers({"ell", "mean_act", "var_act", "h", "count", "sphere_mean", "sphere_var"});
  const auto h = st.hypoactivation();
  for (std::size_t l = 0; l < st.per_layer_mean_act.size(); ++l) {
    layers.row(l, st.per_layer_mean_act[l], st.per_layer_var_act[l], h[l], st.counts[l],
               st.sphere_mean_act, st.sphere_var_act);
  }
  CsvTable lags({"lag", "cov", "se", "reference", "pairs"});
  for (const auto& l : st.lags) lags.row(l.lag, l.cov, l.std_error, l.reference, l.pairs);
  CsvTable cells({"lag", "ell", "cov"});
  for (std::size_t k = 0; k < st.lag_cells.size(); ++k) {
    for (std::size_t l = 0; l < st.lag_cells[k].size(); ++l) cells.row(k + 1, l, st.lag_cells[k][l]);
  }
  CsvTable pooled({"n", "d", "samples", "pool_from", "mean_act", "mean_act_se", "mean_error",
                   "var_act", "var_act_se", "sphere_var", "var_error"});
  pooled.row(st.n, st.d, st.samples, st.pool_from, st.pooled_mean_act, st.pooled_mean_act_se,
             st.pooled_mean_act - 1.0, st.pooled_var_act, st.pooled_var_act_se, st.sphere_var_act,
             st.pooled_var_act - st.sphere_var_act);
  return {{"_layers.csv", header_block(s) + layers.str()},
          {"_lags.csv", header_block(s) + lags.str()},
          {"_lag_cells.csv", header_block(s) + cells.str()},
          {"_pooled.csv", header_block(s) + pooled.str()}};
}

inline std::vector<Artifact> run_correlation(const ExperimentSpec& s) {
  CsvTable t({"d_over_n", "d", "corr_emp", "corr_se", "corr_theory", "var_G_theory", "mean_sq_emp",
              "mean_sq_se", "mean_sq_theory", "c_hat"});
  for (double r : s.options.ratios) {
    NetConfig cfg = s.config;
    cfg.d = static_cast<std::size_t>(std::llround(r * static_cast<double>(cfg.n)));
    cfg.alphas.assign(cfg.d, s.config.alpha());
    cfg.lambdas.assign(cfg.d, s.config.lambda());
    const ChainRun run = run_chain(cfg, s.n_samples, s.workers);
    const bool vanilla_c = cfg.scheme == Scheme::Vanilla && cfg.d > 0;
    const HypoConstant C = vanilla_c ? hypo_for(s, &run.total) : HypoConstant::estimated(0, 0);
    const TheoryPrediction p = predict_G(cfg, C);
    const SqCorrelation e = output_sq_correlation(cfg, run.g_samples);
    const OutputStats o = predict_output_stats(cfg, p);
    t.row(r, cfg.d, e.value, e.std_error, o.corr_sq, p.var_G, e.mean_sq, e.mean_sq_se, o.mean_sq(),
          C.value);
  }
  return {{"", table_text(s, t)}};
}

inline std::vector<Artifact> run_estimate_c(const ExperimentSpec& s) {
  const CEstimate e = estimate_C_detailed(s.config, s.n_samples, s.workers);
  json r;
  r["c_full"] = e.full.value;
  r["c_full_se"] = e.full.std_error;
  r["c_equilibrium"] = e.equilibrium.value;
  r["c_equilibrium_se"] = e.equilibrium.std_error;
  r["pool_from"] = e.pool_from;
  r["samples"] = s.n_samples;
  if (s.format == Format::Json) return {{"", json_text(s, r)}};
  CsvTable t({"c_full", "c_full_se", "c_equilibrium", "c_equilibrium_se", "pool_from", "samples"});
  t.row(e.full.value, e.full.std_error, e.equilibrium.value, e.equilibrium.std_error, e.pool_from,
        s.n_samples);
  return {{"", header_block(s) + t.str()}};
}

inline NetConfig sweep_point(const ExperimentSpec& s, double v) {
  NetConfig cfg = s.config;
  double alpha = s.config.alpha();
  double lambda = s.config.lambda();
  const auto& o = s.options;
  if (o.axis == "n") {
    cfg.n = static_cast<std::size_t>(v);
    if (o.fix_ratio) cfg.d = static_cast<std::size_t>(std::llround(*o.fix_ratio * v));
  } else if (o.axis == "d") {
    cfg.d = static_cast<std::size_t>(v);
  } else if (o.axis == "ratio") {
    cfg.d = static_cast<std::size_t>(std::llround(v * static_cast<double>(cfg.n)));
  } else {
    lambda = std::sqrt(v);
    alpha = std::sqrt(1.0 - v);
  }
  cfg.alphas.assign(cfg.d, alpha);
  cfg.lambdas.assign(cfg.d, lambda);
  cfg.validate();
  return cfg;
}

inline std::vector<Artifact> run_sweep(const ExperimentSpec& s) {
  CsvTable t({"n", "d", "mean_emp", "mean_ci", "mean_theory", "var_emp", "var_ci", "var_theory",
              "lambda2", "c_hat", "c_hat_se", "mean_adj_emp", "mean_adj_ci", "beta"});
  for (double v : s.options.values) {
    const NetConfig cfg = sweep_point(s, v);
    const ChainRun run = run_chain(cfg, s.n_samples, s.workers);
    const ChainAccumulator& acc = run.total;
    HypoConstant C = HypoConstant::estimated(0.0, 0.0);
    double c_hat = std::nan("");
    double c_hat_se = std::nan("");
    if (cfg.d > 0) {
      C = hypo_for(s, &acc);
      const CEstimate e = c_estimates(acc);
      c_hat = e.full.value;
      c_hat_se = e.full.std_error;
    }
    const TheoryPrediction p = predict_G(cfg, C);
    const double l = cfg.d ? cfg.lambdas.front() : s.config.lambda();
    const double a = cfg.d ? cfg.alphas.front() : s.config.alpha();
    t.row(cfg.n, cfg.d, acc.g().mean, acc.g().ci_half_width(), p.mean_G, acc.g().variance(),
          acc.g().variance_ci_half_width(), p.var_G, l * l / (a * a + l * l), c_hat, c_hat_se,
          acc.g_adjusted().mean, acc.g_adjusted().ci_half_width(), p.beta);
  }
  return {{"", table_text(s, t)}};
}

}  // namespace detail

/// Runs a validated spec and returns its artifacts (nothing is written).
inline std::vector<Artifact> run_artifacts(const ExperimentSpec& s) {
  validate_spec(s);
  switch (s.command) {
    case Command::Predict: return detail::run_predict(s);
    case Command::SampleG: return detail::run_sample_g(s);
    case Command::Density: return detail::run_density(s);
    case Command::Conjecture: return detail::run_conjecture(s);
    case Command::Correlation: return detail::run_correlation(s);
    case Command::EstimateC: return detail::run_estimate_c(s);
    case Command::Sweep: return detail::run_sweep(s);
  }
  return {};
}

/// Runs the spec and writes its artifacts. Single-file commands write to
/// output_path (stdout when empty or "-"); multi-file commands treat
/// output_path as a prefix. Returns the paths written.
inline std::vector<std::string> run(const ExperimentSpec& s, std::ostream& out = std::cout) {
  validate_spec(s);
  const bool to_stdout = s.output_path.empty() || s.output_path == "-";
  const bool multi = s.command == Command::SampleG || s.command == Command::Density ||
                     s.command == Command::Conjecture;
  if (multi && to_stdout) {
    throw ValidationError(std::string(to_string(s.command)) + " writes several files; pass --output");
  }
  if (!to_stdout) {
    // Fail on an unwritable destination before any simulation starts.
    const std::string probe = s.output_path + (multi ? "_summary.csv" : "");
    std::ofstream test(probe, std::ios::app);
    if (!test) throw ValidationError("cannot write '" + probe + "'");
  }
  const std::vector<Artifact> arts = run_artifacts(s);
  std::vector<std::string> written;
  for (const auto& a : arts) {
    if (to_stdout) {
      out << a.content;
      continue;
    }
    const std::string path = s.output_path + a.suffix;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    f << a.content;
    written.push_back(path);
  }
  return written;
}

}  // namespace resnet_limits
