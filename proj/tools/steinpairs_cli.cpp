// Batch runner for the steinpairs suites.
//
//   steinpairs runs --n 10 --d 2 --p 0.5 --seed 1 --format csv --out runs.csv
//   steinpairs iidsum --n 100 --sweep 25,50,100,200 --plot-data sweep.csv
//   steinpairs oracle --models runs,perm,mww
//
// Exit status: 0 when every check passes, 1 when some check fails, 2 for
// configuration errors, 3 for anything else.

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "steinpairs/steinpairs.hpp"

namespace {

using namespace steinpairs;

// Flag name -> config key. Values given on the command line override the
// config file, which overrides the defaults.
const std::vector<std::pair<std::string, std::string>> kKeyedFlags{
    {"--seed", "seed"},       {"--samples", "samples"}, {"--out", "out"},         {"--format", "format"},
    {"--gamma-d", "gamma_d"}, {"--c0", "c0"},           {"--a-const", "a_const"}, {"--enumerate", "enumerate"},
    {"--workers", "workers"}, {"--suites", "suites"},   {"--n", "n"},             {"--d", "d"},
    {"--p", "p"},             {"--law", "law"},         {"--q", "q"},             {"--nx", "n_x"},
    {"--ny", "n_y"},          {"--tensor", "tensor_file"}};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || v < 2)
      throw ConfigError(0, "sweep", "expected a comma-separated list of integers >= 2, got '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

void emit(const Report& report, const ExperimentConfig& cfg) {
  if (cfg.out.empty())
    emit_report(report, cfg.format, std::cout);
  else
    write_report(report, cfg.format, cfg.out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exchangeable-pair normal approximation: bounds, identities and oracles"};
  app.require_subcommand(1);
  app.fallthrough();

  std::map<std::string, std::string> flags;
  for (const auto& [flag, key] : kKeyedFlags) {
    flags[key];
    app.add_option(flag, flags[key], "sets '" + key + "'");
  }
  std::string config_path;
  app.add_option("--config", config_path, "key = value file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  std::map<std::string, CLI::App*> model_cmds;
  for (const auto& m : model_names())
    model_cmds[m] = app.add_subcommand(m, "run the " + m + " suites");

  std::string sweep, plot_data;
  model_cmds["iidsum"]->add_option("--sweep", sweep, "comma-separated n values for a bound-vs-n sweep");
  model_cmds["iidsum"]->add_option("--plot-data", plot_data, "write sweep columns (n,bound,distance,std_error)");

  auto* bound_cmd = app.add_subcommand("bound", "non-smooth bound arithmetic on supplied terms");
  double A = 0.0, B = 0.0, C = 0.0;
  int bound_d = 1;
  bound_cmd->add_option("--A", A, "A' term")->check(CLI::NonNegativeNumber);
  bound_cmd->add_option("--B", B, "B' term")->check(CLI::NonNegativeNumber);
  bound_cmd->add_option("--C", C, "C' term")->check(CLI::NonNegativeNumber);
  bound_cmd->add_option("--dim", bound_d, "dimension")->check(CLI::PositiveNumber);

  auto* distance_cmd = app.add_subcommand("distance", "Stein solver and smoothing checks on the test battery");
  std::string sigma_kind = "identity";
  distance_cmd->add_option("--sigma", sigma_kind, "identity, or runs (the runs covariance at --n/--d/--p)")
      ->check(CLI::IsMember({"identity", "runs"}));

  auto* oracle_cmd = app.add_subcommand("oracle", "enumeration oracles for several models");
  std::string oracle_models = "runs,iidsum,perm,mww";
  oracle_cmd->add_option("--models", oracle_models, "comma-separated models");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& [flag, key] : kKeyedFlags)
      if (app.count(flag) > 0) set_config_value(cfg, key, flags[key]);

    CLI::App* cmd = app.get_subcommands().front();
    if (model_cmds.count(cmd->get_name())) cfg.model = cmd->get_name();
    validate(cfg);

    if (print_config) {
      std::cout << serialize_config(cfg);
      return 0;
    }

    Report report;
    if (cmd == bound_cmd) {
      report = bound_suite(cfg, A, B, C, bound_d);
    } else if (cmd == distance_cmd) {
      const SymMatrix sigma = sigma_kind == "runs" ? runs_sigma(RunsConfig{cfg.n, cfg.d, cfg.p})
                                                   : SymMatrix(Matrix::Identity(cfg.d, cfg.d));
      report = stein_suite(cfg, sigma);
    } else if (cmd == oracle_cmd) {
      // One task per model; rows are appended in the order given.
      std::vector<std::future<Report>> jobs;
      std::stringstream ss(oracle_models);
      std::string m;
      while (std::getline(ss, m, ',')) {
        ExperimentConfig c = cfg;
        set_config_value(c, "model", m);
        c.suites = {Suite::oracles};
        jobs.push_back(std::async(std::launch::async, [c] { return run_experiment(c); }));
      }
      for (auto& j : jobs) report.append(j.get());
    } else {
      report = run_experiment(cfg);
      if (!sweep.empty()) {
        const auto pts = iid_sweep(cfg, parse_int_list(sweep));
        if (plot_data.empty()) {
          emit_sweep(pts, std::cout);
        } else {
          std::ofstream os(plot_data);
          if (!os) throw IoError("cannot open " + plot_data + " for writing");
          emit_sweep(pts, os);
        }
      }
    }

    emit(report, cfg);
    if (!report.all_pass()) {
      std::cerr << report.failures() << " check(s) failed\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
