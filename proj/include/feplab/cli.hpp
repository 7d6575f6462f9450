#pragma once

// Command-line front end: run, sweep, compare and validate. Exit codes are
// 0 on success, 2 on configuration errors and 3 when a simulation aborts.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "feplab/config.hpp"
#include "feplab/errors.hpp"
#include "feplab/sim_harness.hpp"

namespace feplab {

enum ExitCode : int { kExitOk = 0, kExitInternal = 1, kExitConfig = 2, kExitAbort = 3 };

/// Bare names are looked up in FEPLAB_SCENARIO_DIR, with or without ".toml".
inline std::filesystem::path resolve_scenario_path(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) return arg;
  if (const char* dir = std::getenv("FEPLAB_SCENARIO_DIR"); dir && *dir) {
    for (const auto& cand : {fs::path(dir) / arg, fs::path(dir) / (arg + ".toml")})
      if (fs::exists(cand)) return cand;
  }
  return arg;
}

/// Runs every job, on up to `workers` threads. Results come back in job order
/// and the first failure (in job order) is rethrown.
inline std::vector<SimResult> run_all(const std::vector<ScenarioConfig>& jobs, unsigned workers) {
  std::vector<SimResult> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_scenario(jobs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(jobs.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

namespace cli_detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline void check_writable(const std::filesystem::path& f, bool force) {
  if (!force && std::filesystem::exists(f))
    throw ConfigError(f.string() + " already exists (use --force to overwrite)");
}

inline void write_all(const std::filesystem::path& out, const std::vector<ScenarioConfig>& jobs,
                      const std::vector<SimResult>& results, bool force, std::ostream& os) {
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto p = write_outputs(out, jobs[i], results[i], force);
    os << "wrote " << p.csv.string() << " and " << p.metrics.string() << '\n';
  }
}

/// Split "cbf+clf+aggressive" into mode "cbf+clf" and preset "aggressive".
inline std::pair<std::string, std::string> split_preset(const std::string& s) {
  const auto plus = s.rfind('+');
  if (plus == std::string::npos || plus == 0 || plus + 1 == s.size())
    throw ConfigError("preset '" + s + "' is not <mode>+<controller>");
  return {s.substr(0, plus), s.substr(plus + 1)};
}

inline std::vector<std::pair<double, double>> parse_pairs(const std::vector<std::string>& raw) {
  std::vector<std::pair<double, double>> out;
  for (const auto& r : raw) {
    const auto comma = r.find(',');
    if (comma == std::string::npos) throw ConfigError("--pair expects g1,g2 but got '" + r + "'");
    try {
      std::size_t used1 = 0, used2 = 0;
      const std::string a = r.substr(0, comma), b = r.substr(comma + 1);
      const double g1 = std::stod(a, &used1);
      const double g2 = std::stod(b, &used2);
      if (used1 != a.size() || used2 != b.size()) throw std::invalid_argument(r);
      out.emplace_back(g1, g2);
    } catch (const std::logic_error&) {
      throw ConfigError("--pair expects g1,g2 but got '" + r + "'");
    }
  }
  return out;
}

}  // namespace cli_detail

struct CliOptions {
  std::vector<std::string> configs;
  std::string out = ".";
  std::vector<std::string> sets;
  bool force = false;
  unsigned parallel = 1;
  // sweep
  std::vector<std::string> pairs;
  std::vector<double> gamma1;
  std::vector<double> gamma2;
  // compare
  std::vector<std::string> presets;
  std::string table = "compare";
};

inline int cmd_run(const CliOptions& o, std::ostream& os) {
  const ScenarioConfig cfg = load_scenario(resolve_scenario_path(o.configs.at(0)), o.sets);
  const auto paths = output_paths(o.out, cfg.name);
  cli_detail::check_writable(paths.csv, o.force);
  cli_detail::check_writable(paths.metrics, o.force);
  const auto results = run_all({cfg}, 1);
  cli_detail::write_all(o.out, {cfg}, results, o.force, os);
  return kExitOk;
}

inline int cmd_sweep(const CliOptions& o, std::ostream& os) {
  auto grid = cli_detail::parse_pairs(o.pairs);
  if (o.gamma1.empty() != o.gamma2.empty())
    throw ConfigError("--gamma1 and --gamma2 must be given together");
  for (double g1 : o.gamma1)
    for (double g2 : o.gamma2) grid.emplace_back(g1, g2);
  if (grid.empty()) throw ConfigError("sweep grid is empty");

  const auto path = resolve_scenario_path(o.configs.at(0));
  const std::string base = load_scenario(path, o.sets).name;
  std::vector<ScenarioConfig> jobs;
  std::set<std::string> names;
  for (const auto& [g1, g2] : grid) {
    auto sets = o.sets;
    sets.push_back("filter.gamma_1=" + cli_detail::fmt_g(g1));
    sets.push_back("filter.gamma_2=" + cli_detail::fmt_g(g2));
    ScenarioConfig c = load_scenario(path, sets);
    c.name = base + "_g" + cli_detail::fmt_g(g1) + "_" + cli_detail::fmt_g(g2);
    if (!names.insert(c.name).second) throw ConfigError("duplicate grid point " + c.name);
    jobs.push_back(std::move(c));
  }
  const std::filesystem::path summary = std::filesystem::path(o.out) / (base + ".sweep.csv");
  cli_detail::check_writable(summary, o.force);
  for (const auto& j : jobs) {
    const auto p = output_paths(o.out, j.name);
    cli_detail::check_writable(p.csv, o.force);
    cli_detail::check_writable(p.metrics, o.force);
  }

  const auto results = run_all(jobs, o.parallel);
  cli_detail::write_all(o.out, jobs, results, o.force, os);
  std::ofstream f(summary, std::ios::binary);
  f << "gamma_1,gamma_2,min_h1_deg,min_h2_deg,max_violation_deg,peak_delta_rate_deg_s,"
       "steps_at_rate_limit\n";
  char buf[256];
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Metrics& m = results[i].metrics;
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu\n", jobs[i].hocbf.gamma_1,
                  jobs[i].hocbf.gamma_2, m.min_h1, m.min_h2, m.max_violation, m.peak_delta_rate,
                  m.steps_at_rate_limit);
    f << buf;
  }
  os << "wrote " << summary.string() << '\n';
  return kExitOk;
}

inline int cmd_compare(const CliOptions& o, std::ostream& os) {
  std::vector<ScenarioConfig> jobs;
  if (!o.presets.empty()) {
    if (o.configs.size() != 1) throw ConfigError("--preset needs exactly one base scenario");
    const auto path = resolve_scenario_path(o.configs[0]);
    const std::string base = load_scenario(path, o.sets).name;
    for (const auto& p : o.presets) {
      const auto [mode, preset] = cli_detail::split_preset(p);
      auto sets = o.sets;
      sets.push_back("filter.mode=\"" + mode + "\"");
      sets.push_back("controller.preset=\"" + preset + "\"");
      ScenarioConfig c = load_scenario(path, sets);
      c.name = base + "_" + p;
      jobs.push_back(std::move(c));
    }
  } else {
    for (const auto& c : o.configs) jobs.push_back(load_scenario(resolve_scenario_path(c), o.sets));
  }
  if (jobs.size() < 2) throw ConfigError("compare needs at least two configurations");
  std::set<std::string> names;
  for (const auto& j : jobs)
    if (!names.insert(j.name).second) throw ConfigError("duplicate configuration name " + j.name);

  const std::filesystem::path table = std::filesystem::path(o.out) / (o.table + ".csv");
  cli_detail::check_writable(table, o.force);
  for (const auto& j : jobs) {
    const auto p = output_paths(o.out, j.name);
    cli_detail::check_writable(p.csv, o.force);
    cli_detail::check_writable(p.metrics, o.force);
  }

  const auto results = run_all(jobs, o.parallel);
  cli_detail::write_all(o.out, jobs, results, o.force, os);
  std::ofstream f(table, std::ios::binary);
  f << "name,mode,controller,max_violation_deg,time_in_violation_s,min_h1_deg,min_h2_deg,"
       "tracking_rmse_deg,peak_delta_rate_deg_s,steps_at_rate_limit,steps_recovery,"
       "steps_relaxed\n";
  char buf[512];
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const Metrics& m = results[i].metrics;
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu,%zu\n",
                  jobs[i].name.c_str(), to_string(jobs[i].mode), jobs[i].controller_label.c_str(),
                  m.max_violation, m.time_in_violation, m.min_h1, m.min_h2, m.tracking_rmse,
                  m.peak_delta_rate, m.steps_at_rate_limit, m.steps_recovery, m.steps_relaxed);
    f << buf;
  }
  os << "wrote " << table.string() << '\n';
  return kExitOk;
}

inline int cmd_validate(const CliOptions& o, std::ostream& os) {
  for (const auto& c : o.configs) {
    const ScenarioConfig cfg = load_scenario(resolve_scenario_path(c), o.sets);
    os << c << ": ok (" << cfg.name << ", " << record_count(cfg.duration, cfg.dt)
       << " steps)\n";
  }
  return kExitOk;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& os = std::cout,
                    std::ostream& es = std::cerr) {
  CLI::App app{"Flight-envelope-protection simulation lab"};
  app.require_subcommand(1);
  CliOptions o;

  const auto common = [&](CLI::App* sub, bool many) {
    auto* cfg = sub->add_option("config", o.configs, many ? "Scenario files or names" : "Scenario file or name")
                    ->required();
    if (!many) cfg->expected(1);
    sub->add_option("--set", o.sets, "Override, dotted key=value (repeatable)");
  };
  const auto outputs = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--force", o.force, "Overwrite existing output files");
  };
  const auto parallel = [&](CLI::App* sub) {
    sub->add_option("--parallel", o.parallel, "Worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  common(run, false);
  outputs(run);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a scenario over a grid of HOCBF gains");
  common(sweep, false);
  outputs(sweep);
  parallel(sweep);
  sweep->add_option("--pair", o.pairs, "Grid point g1,g2 (repeatable)");
  sweep->add_option("--gamma1", o.gamma1, "gamma_1 values (product with --gamma2)")->delimiter(',');
  sweep->add_option("--gamma2", o.gamma2, "gamma_2 values (product with --gamma1)")->delimiter(',');

  CLI::App* compare = app.add_subcommand("compare", "Run configurations side by side");
  common(compare, true);
  outputs(compare);
  parallel(compare);
  compare->add_option("--preset", o.presets, "<mode>+<controller> variant of one base scenario");
  compare->add_option("--table", o.table, "Name of the comparison table (without .csv)");

  CLI::App* validate = app.add_subcommand("validate", "Check scenario files without running");
  common(validate, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, os, es);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(o, os);
    if (sweep->parsed()) return cmd_sweep(o, os);
    if (compare->parsed()) return cmd_compare(o, os);
    return cmd_validate(o, os);
  } catch (const ConfigError& e) {
    es << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateCoefficientError& e) {
    es << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SimulationAbort& e) {
    es << "simulation aborted: " << e.what() << '\n';
    return kExitAbort;
  } catch (const std::exception& e) {
    es << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace feplab
