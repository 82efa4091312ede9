// Command-line front end: run, sweep, replay, validate.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include "pursuit/experiments.hpp"
#include "pursuit/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <string>

namespace fs = std::filesystem;
using namespace pursuit;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

constexpr const char* kSeedEnv = "PURSUIT_MASTER_SEED";

ScenarioConfig load_checked(const std::string& path) {
  ScenarioConfig c = load_config(path);
  if (const char* env = std::getenv(kSeedEnv)) {
    try {
      c.master_seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string(kSeedEnv) + " is not an unsigned integer");
    }
  }
  validate(c);
  return c;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string record_name(const RunRecord& r) { return r.scenario_id + "_seed" + std::to_string(r.seed) + ".jsonl"; }

int cmd_run(const std::string& config_path, std::uint64_t seed, const fs::path& out) {
  const ScenarioConfig c = load_checked(config_path);
  const RunRecord rec = run(c, seed);
  std::ostringstream os;
  write_record(os, rec);
  write_file(out / "records" / record_name(rec), os.str());
  Cell cell{0, 0, {c.tracker_speed, c.evader_speed}, c.tracker_action, c.evader_action};
  write_file(out / "runs.csv", runs_csv({summarize(cell, 0, rec)}));
  if (!rec.valid) {
    std::cerr << "run aborted: " << rec.invalid_reason << '\n';
    return kRuntimeError;
  }
  std::cout << rec.scenario_id << " seed=" << seed << " winner=" << to_string(rec.winner) << " k_stop=" << rec.k_stop
            << " trigger=" << to_string(rec.trigger_metric) << '/' << to_string(rec.trigger_bound) << '\n';
  return kOk;
}

int cmd_sweep(const std::string& config_path, const fs::path& out, unsigned jobs, bool keep_records) {
  const ScenarioConfig c = load_checked(config_path);
  RecordVisitor visit;
  std::mutex io_mutex;
  if (keep_records) {
    visit = [&](const Cell&, std::size_t, const RunRecord& rec) {
      std::ostringstream os;
      write_record(os, rec);
      std::lock_guard lock(io_mutex);
      write_file(out / "records" / record_name(rec), os.str());
    };
  }
  const auto t0 = std::chrono::steady_clock::now();
  const SweepResult res = sweep(c, jobs, visit);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(out / "aggregate.csv", aggregate_csv(res.by_ratio));
  write_file(out / "cells.csv", cells_csv(res.cells));
  write_file(out / "runs.csv", runs_csv(res.runs));
  std::cout << "ratio      tracker_action  evader_action   tracker_win%  invalid\n";
  for (const CellAggregate& a : res.by_ratio) {
    std::cout << std::left << std::setw(11) << (std::to_string(a.ratio.num) + "/" + std::to_string(a.ratio.den))
              << std::setw(16) << to_string(a.tracker_action) << std::setw(16) << to_string(a.evader_action)
              << std::setw(14) << a.tracker_win_pct << a.n_invalid << '\n';
  }
  std::cout << res.runs.size() << " runs in " << std::fixed << std::setprecision(1) << secs << " s\n";
  return kOk;
}

int cmd_replay(const std::string& record_path) {
  std::ifstream in(record_path);
  if (!in) throw ConfigError("cannot open record: " + record_path);
  const RunRecord rec = read_record(in);
  std::cout << "# " << rec.scenario_id << " seed=" << rec.seed << '\n';
  std::cout << "k,cov_trace,est_error,true_distance\n";
  for (const StepRecord& s : rec.steps) {
    std::cout << s.k << ',' << format_number(s.metrics.cov_trace) << ',' << format_number(s.metrics.est_error) << ','
              << format_number(s.metrics.true_distance) << '\n';
  }
  if (!rec.valid) {
    std::cout << "stored: invalid (" << rec.invalid_reason << ")\n";
    return kOk;
  }
  const auto verdict = readjudicate(rec);
  const bool agree = verdict && verdict->first == rec.k_stop && verdict->second.winner == rec.winner &&
                     verdict->second.metric == rec.trigger_metric && verdict->second.bound == rec.trigger_bound;
  std::cout << "stored: winner=" << to_string(rec.winner) << " k_stop=" << rec.k_stop << '\n';
  if (verdict) {
    std::cout << "replayed: winner=" << to_string(verdict->second.winner) << " k_stop=" << verdict->first << '\n';
  } else {
    std::cout << "replayed: no decision\n";
  }
  std::cout << (agree ? "agree" : "DISAGREE") << '\n';
  return agree ? kOk : kRuntimeError;
}

int cmd_validate(const std::string& config_path) {
  const ScenarioConfig c = load_checked(config_path);
  std::cout << "ok: " << cells(c.sweep).size() << " cells x " << c.n_runs << " runs\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bearings-only pursuit game simulator"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string record_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned jobs = 0;
  bool keep_records = false;

  auto* run_cmd = app.add_subcommand("run", "execute one run and write its record");
  run_cmd->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "run seed")->required();
  run_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "execute the full speed-ratio x action-pair matrix");
  sweep_cmd->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", out_dir, "output directory")->required();
  sweep_cmd->add_option("--jobs", jobs, "worker threads (default: all cores)");
  sweep_cmd->add_flag("--records", keep_records, "also write every run record under records/");

  auto* replay_cmd = app.add_subcommand("replay", "print a record's metric timeline and re-adjudicate it");
  replay_cmd->add_option("--record", record_path, "record file")->required()->check(CLI::ExistingFile);

  auto* validate_cmd = app.add_subcommand("validate", "check a configuration file");
  validate_cmd->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, seed, out_dir);
    if (*sweep_cmd) return cmd_sweep(config_path, out_dir, jobs, keep_records);
    if (*replay_cmd) return cmd_replay(record_path);
    if (*validate_cmd) return cmd_validate(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
