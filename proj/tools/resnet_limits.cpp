// resnet_limits: predictions and Monte Carlo checks for ReLU ResNets at
// initialization. Run `resnet_limits --help` for the command list.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "resnet_limits/experiment.hpp"

namespace rl = resnet_limits;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

int report(const char* kind, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << std::endl;
  return code;
}

struct Flags {
  std::size_t n_in = 10;
  std::size_t n_out = 10;
  std::size_t n = 100;
  std::size_t d = 100;
  std::string alpha = "1/sqrt2";
  std::string lambda = "1/sqrt2";
  std::string alphas;
  std::string lambdas;
  std::string scheme = "vanilla";
  std::uint64_t seed = 0;
  std::size_t samples = 10000;
  std::size_t workers = rl::default_workers();
  std::string output;
  std::string format = "csv";
  std::optional<double> hypo_c;
  std::string simulator = "chain";
  double bin_width = 0.25;
  double grid_step = 0.01;
  std::size_t max_lag = 2;
  std::string ratios = "0.1,0.5,1";
  std::string axis = "n";
  std::string values;
  std::optional<double> fix_ratio;
};

void add_common(CLI::App* cmd, Flags& f, bool simulates) {
  cmd->add_option("--nin", f.n_in, "input dimension")->capture_default_str();
  cmd->add_option("--nout", f.n_out, "output dimension")->capture_default_str();
  cmd->add_option("--n", f.n, "hidden width")->capture_default_str();
  cmd->add_option("--d", f.d, "hidden depth")->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "skip coefficient (decimal or 1/sqrt2)")->capture_default_str();
  cmd->add_option("--lambda", f.lambda, "feed-forward coefficient")->capture_default_str();
  cmd->add_option("--alphas", f.alphas, "per-layer skip coefficients, comma separated");
  cmd->add_option("--lambdas", f.lambdas, "per-layer feed-forward coefficients");
  cmd->add_option("--scheme", f.scheme, "vanilla or balanced")->capture_default_str();
  cmd->add_option("--c", f.hypo_c, "use this hypoactivation constant instead of estimating it");
  cmd->add_option("-o,--output", f.output, "output file, or prefix for multi-file commands");
  cmd->add_option("--format", f.format, "csv or json")->capture_default_str();
  if (simulates) {
    cmd->add_option("--seed", f.seed, "root seed")->capture_default_str();
    cmd->add_option("--samples", f.samples, "Monte Carlo samples")->capture_default_str();
    cmd->add_option("--workers", f.workers, "worker threads")->capture_default_str();
  }
}

rl::ExperimentSpec to_spec(rl::Command command, const Flags& f) {
  rl::ExperimentSpec s;
  s.command = command;
  rl::NetConfig& c = s.config;
  c.n_in = f.n_in;
  c.n_out = f.n_out;
  c.n = f.n;
  c.d = f.d;
  c.scheme = rl::parse_scheme(f.scheme);
  c.seed = f.seed;
  if (!f.alphas.empty() || !f.lambdas.empty()) {
    c.alphas = rl::parse_list(f.alphas);
    c.lambdas = rl::parse_list(f.lambdas);
  } else {
    c.alphas.assign(c.d, rl::parse_coefficient(f.alpha));
    c.lambdas.assign(c.d, rl::parse_coefficient(f.lambda));
  }
  s.n_samples = f.samples;
  s.workers = f.workers;
  s.output_path = f.output;
  s.format = rl::parse_format(f.format);
  s.options.hypo_c = f.hypo_c;
  s.options.simulator = f.simulator;
  s.options.bin_width = f.bin_width;
  s.options.grid_step = f.grid_step;
  s.options.max_lag = f.max_lag;
  s.options.ratios = rl::parse_list(f.ratios);
  s.options.axis = f.axis;
  s.options.values = rl::parse_list(f.values);
  s.options.fix_ratio = f.fix_ratio;
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Infinite-depth-and-width predictions and Monte Carlo checks for ReLU ResNets"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rl::kVersion));
  Flags f;

  struct Sub {
    CLI::App* app;
    rl::Command command;
  };
  std::vector<Sub> subs;
  auto sub = [&](const char* name, const char* help, rl::Command c, bool simulates) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, f, simulates);
    subs.push_back({cmd, c});
    return cmd;
  };

  auto* predict = sub("predict", "closed-form prediction for G and the output moments",
                      rl::Command::Predict, false);
  (void)predict;
  sub("sample-g", "draw G from the norm-chain simulator", rl::Command::SampleG, true);
  auto* density = sub("density", "predicted, infinite-width and empirical densities of ln|z_out|^2",
                      rl::Command::Density, true);
  density->add_option("--simulator", f.simulator, "chain or full")->capture_default_str();
  density->add_option("--bin-width", f.bin_width, "empirical histogram bin width")
      ->capture_default_str();
  density->add_option("--step", f.grid_step, "density grid step")->capture_default_str();
  auto* conj = sub("conjecture", "per-layer activation statistics and lag covariances",
                   rl::Command::Conjecture, true);
  conj->add_option("--max-lag", f.max_lag, "largest lag")->capture_default_str();
  auto* corr = sub("correlation", "correlation of squared output coordinates across d/n",
                   rl::Command::Correlation, true);
  corr->add_option("--ratios", f.ratios, "d/n values, comma separated")->capture_default_str();
  sub("estimate-c", "estimate the hypoactivation constant", rl::Command::EstimateC, true);
  auto* sweep = sub("sweep", "empirical vs predicted moments of G along one axis",
                    rl::Command::Sweep, true);
  sweep->add_option("--axis", f.axis, "n, d, ratio or lambda2")->capture_default_str();
  sweep->add_option("--values", f.values, "axis values, comma separated")->required();
  sweep->add_option("--fix-ratio", f.fix_ratio, "with --axis n, set d = ratio * n");

  std::string config_path;
  std::string run_output;
  auto* run_cmd = app.add_subcommand("run", "run an experiment spec file (JSON)");
  run_cmd->add_option("config", config_path, "spec file")->required();
  run_cmd->add_option("-o,--output", run_output, "override the output path");

  std::string rerun_input;
  std::string rerun_output;
  auto* rerun = app.add_subcommand("rerun", "regenerate an output file from its embedded spec");
  rerun->add_option("input", rerun_input, "a file written by this tool")->required();
  rerun->add_option("-o,--output", rerun_output, "where to write the regenerated output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("validation", e.what(), kExitValidation);
  }

  try {
    rl::ExperimentSpec spec;
    if (run_cmd->parsed()) {
      std::ifstream in(config_path);
      if (!in) throw rl::ValidationError("cannot open '" + config_path + "'");
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw rl::ValidationError(std::string("malformed spec file: ") + e.what());
      }
      spec = rl::spec_from_json(j);
      if (!run_output.empty()) spec.output_path = run_output;
    } else if (rerun->parsed()) {
      spec = rl::spec_from_output_file(rerun_input);
      spec.output_path = rerun_output;
    } else {
      for (const auto& s : subs) {
        if (s.app->parsed()) spec = to_spec(s.command, f);
      }
    }
    for (const auto& path : rl::run(spec)) std::cerr << "wrote " << path << '\n';
    return EXIT_SUCCESS;
  } catch (const rl::ValidationError& e) {
    return report("validation", e.what(), kExitValidation);
  } catch (const rl::InsufficientDataError& e) {
    return report("validation", e.what(), kExitValidation);
  } catch (const std::domain_error& e) {
    return report("validation", e.what(), kExitValidation);
  } catch (const std::out_of_range& e) {
    return report("validation", e.what(), kExitValidation);
  } catch (const rl::NumericalError& e) {
    return report("numerical", e.what(), kExitNumerical);
  } catch (const std::exception& e) {
    return report("numerical", e.what(), kExitNumerical);
  }
}
