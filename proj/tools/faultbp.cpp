// Copyright 2026 The faultbp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// faultbp command-line front end: solve, sweep, theory, gen.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "faultbp/error.hpp"
#include "faultbp/experiments.hpp"
#include "faultbp/instance_io.hpp"
#include "faultbp/theory.hpp"

namespace {

using namespace faultbp;

// Exit codes: 1 for library errors, 2 for usage errors (CLI11's own).
int report(const std::string& code, const std::string& message) {
  nlohmann::json line{{"error", message}, {"code", code}};
  std::cerr << line.dump() << '\n';
  return 1;
}

struct Output {
  std::string path;
  std::ofstream file;

  std::ostream& stream() {
    if (path.empty() || path == "-") return std::cout;
    if (!file.is_open()) {
      file.open(path);
      require(bool(file), ErrorCode::kIo, "cannot open " + path + " for writing");
    }
    return file;
  }
};

std::string pattern_json(const FaultPattern& x) {
  std::string out = "[";
  for (Eigen::Index s = 0; s < x.size(); ++s) {
    if (s) out += ',';
    out += x[s] ? '1' : '0';
  }
  return out + "]";
}

nlohmann::json soft_json(const SoftDecision<double>& soft) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index s = 0; s < soft.size(); ++s) arr.push_back(soft[s]);
  return arr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fault identification by non-parametric belief propagation"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve one instance file");
  std::string instance_path;
  std::string algo = "nbp";
  std::string pipeline = "round+local";
  int bins = 1024;
  int max_iters = 50;
  double tol = 1e-5;
  std::string nu = "auto";
  double damping = 0.0;
  std::string trace_path;
  std::string solve_out;
  solve_cmd->add_option("--instance", instance_path, "Instance JSON")->required();
  solve_cmd->add_option("--algo", algo, "nbp|maxprod|sumprod|oracle")->capture_default_str();
  solve_cmd->add_option("--pipeline", pipeline, "none|round|round+local")->capture_default_str();
  solve_cmd->add_option("--bins", bins)->capture_default_str();
  solve_cmd->add_option("--max-iters", max_iters)->capture_default_str();
  solve_cmd->add_option("--tol", tol)->capture_default_str();
  solve_cmd->add_option("--nu", nu, "Prior lobe variance or 'auto'")->capture_default_str();
  solve_cmd->add_option("--damping", damping)->capture_default_str();
  solve_cmd->add_option("--trace", trace_path, "Per-iteration JSON lines (nbp only)");
  solve_cmd->add_option("--out", solve_out, "Result JSON (default stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
  std::string param = "p";
  std::vector<double> values;
  GeneratorConfig gen;
  int trials = 1000;
  std::uint64_t seed = 1;
  std::string sweep_out;
  std::vector<std::string> algos{"nbp", "maxprod"};
  std::vector<std::string> pipelines{"none", "round", "round+local"};
  int workers = 0;
  bool timing = false;
  int sweep_bins = 1024;
  sweep_cmd->add_option("--param", param, "p|q|sigma|p-reported|bins")->capture_default_str();
  sweep_cmd->add_option("--values", values, "Grid values")->required()->expected(1, -1)->delimiter(',');
  sweep_cmd->add_option("--m", gen.m)->capture_default_str();
  sweep_cmd->add_option("--n", gen.n)->capture_default_str();
  sweep_cmd->add_option("--p", gen.p)->capture_default_str();
  sweep_cmd->add_option("--q", gen.q)->capture_default_str();
  sweep_cmd->add_option("--sigma", gen.sigma)->capture_default_str();
  sweep_cmd->add_option("--trials", trials)->capture_default_str();
  sweep_cmd->add_option("--seed", seed)->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV path (default stdout)");
  sweep_cmd->add_option("--algos", algos)->capture_default_str()->expected(1, -1)->delimiter(',');
  sweep_cmd->add_option("--pipelines", pipelines)->capture_default_str()->expected(1, -1)->delimiter(',');
  sweep_cmd->add_option("--bins", sweep_bins)->capture_default_str();
  sweep_cmd->add_option("--workers", workers, "0 = hardware concurrency")->capture_default_str();
  sweep_cmd->add_flag("--timing", timing, "Record wall time (CSV no longer reproducible)");

  // theory
  auto* theory_cmd = app.add_subcommand("theory", "Scalar-channel predictions over an SNR grid");
  double theory_p = 0.12;
  double delta = 0.5;
  std::vector<double> gammas;
  std::string theory_out;
  theory_cmd->add_option("--p", theory_p)->capture_default_str();
  theory_cmd->add_option("--delta", delta, "m / n")->capture_default_str();
  theory_cmd->add_option("--gamma-grid", gammas, "SNR values")->required()->expected(1, -1);
  theory_cmd->add_option("--out", theory_out, "CSV path (default stdout)");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Sample a random instance");
  GeneratorConfig gen_config;
  std::uint64_t gen_seed = 1;
  std::string gen_out;
  gen_cmd->add_option("--m", gen_config.m)->capture_default_str();
  gen_cmd->add_option("--n", gen_config.n)->capture_default_str();
  gen_cmd->add_option("--p", gen_config.p)->capture_default_str();
  gen_cmd->add_option("--q", gen_config.q)->capture_default_str();
  gen_cmd->add_option("--sigma", gen_config.sigma)->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed)->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "Instance JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 2;
  }

  try {
    if (*solve_cmd) {
      const auto file = read_instance_file(instance_path);
      SolveSettings settings;
      settings.nbp.bins = bins;
      settings.nbp.max_iters = max_iters;
      settings.nbp.tolerance = tol;
      settings.nbp.damping = damping;
      if (nu != "auto") {
        try {
          settings.nbp.relaxation_variance = std::stod(nu);
        } catch (const std::exception&) {
          throw Error(ErrorCode::kInvalidArgument, "--nu must be a number or 'auto'");
        }
      }
      validate(settings.nbp);
      settings.discrete.max_iters = max_iters;
      settings.discrete.tolerance = tol;
      settings.discrete.damping = damping;
      const Algorithm algorithm = parse_algorithm(algo);
      const Pipeline chosen = parse_pipeline(pipeline);

      if (!trace_path.empty()) {
        require(algorithm == Algorithm::kNbp, ErrorCode::kInvalidArgument,
                "--trace is only available for nbp");
        std::ofstream trace(trace_path);
        require(bool(trace), ErrorCode::kIo, "cannot open " + trace_path);
        solve(file.model, file.measurements, settings.nbp,
              [&](const IterationTrace<double>& it) {
                nlohmann::json line{{"iteration", it.iteration},
                                    {"max_residual", it.max_residual},
                                    {"soft", soft_json(it.soft)}};
                trace << line.dump() << '\n';
              });
      }
      const AlgorithmRun run =
          run_algorithm(algorithm, file.model, file.measurements, settings, true);
      const auto index = static_cast<std::size_t>(chosen);
      nlohmann::json result{{"algorithm", to_string(algorithm)},
                            {"pipeline", to_string(chosen)},
                            {"pattern", nlohmann::json::parse(pattern_json(run.patterns[index]))},
                            {"loss", run.losses[index]},
                            {"soft", soft_json(run.soft)},
                            {"iterations", run.iterations},
                            {"converged", run.converged},
                            {"runtime_s", run.runtime_s}};
      if (file.truth) {
        const Score s = score(*file.truth, run.patterns[index]);
        result["exact_match"] = s.exact_match;
        result["tp"] = s.tp;
        result["fp"] = s.fp;
        result["fn"] = s.fn;
      }
      Output out{solve_out, {}};
      out.stream() << result.dump() << '\n';
    } else if (*sweep_cmd) {
      SweepConfig config;
      config.param = parse_sweep_param(param);
      config.values = values;
      config.base = gen;
      config.trials = trials;
      config.seed = seed;
      config.algorithms.clear();
      for (const auto& a : algos) config.algorithms.push_back(parse_algorithm(a));
      config.pipelines.clear();
      for (const auto& p : pipelines) config.pipelines.push_back(parse_pipeline(p));
      config.settings.nbp.bins = sweep_bins;
      config.workers = workers;
      config.timing = timing;
      const auto result = run_sweep(config);
      Output out{sweep_out, {}};
      write_csv(out.stream(), result.rows);
    } else if (*theory_cmd) {
      std::ostringstream csv;
      theory::write_theory_csv(csv, theory_p, delta, gammas);
      Output out{theory_out, {}};
      out.stream() << csv.str();
    } else if (*gen_cmd) {
      const auto instance = sample_instance<double>(gen_config, gen_seed);
      Output out{gen_out, {}};
      write_instance(out.stream(), instance.model, instance.measurements, &instance.truth);
    }
  } catch (const Error& e) {
    return report(to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return report("internal", e.what());
  }
  return 0;
}
