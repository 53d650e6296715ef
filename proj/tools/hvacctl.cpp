// Command-line front end: simulate | eval-dynamics | run | report.
// Every command honors --config/--seed/--out and exits nonzero with a
// one-line diagnostic on failure. Primary outputs are deterministic for a
// fixed seed; wall-clock timings only ever appear in planner diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hvacmbrl/agent.hpp"
#include "hvacmbrl/config.hpp"
#include "hvacmbrl/evaldyn.hpp"
#include "hvacmbrl/numio.hpp"

namespace fs = std::filesystem;
using namespace hvacmbrl;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<std::string> out;
};

ExperimentConfig effective_config(const GlobalOpts& g) {
  ExperimentConfig cfg =
      g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.out) cfg.out_dir = *g.out;
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return (fs::path(cfg.out_dir) / name).string();
}

int64_t steps_for_days(const ExperimentConfig& cfg, int days) {
  return int64_t(std::llround(double(days) * 1440.0 / cfg.env.control_dt_minutes));
}

int cmd_simulate(ExperimentConfig cfg, std::optional<int> days_flag,
                 std::optional<std::string> mode_flag) {
  if (days_flag) cfg.simulate_days = *days_flag;
  if (mode_flag) cfg.mode = parse_run_mode(*mode_flag);
  if (cfg.mode != RunMode::baseline_fixed && cfg.mode != RunMode::baseline_default)
    cfg.mode = RunMode::baseline_fixed;  // simulate runs baselines only
  cfg.validate();

  // A simulate pass is a collection-only run: all steps in the collection
  // phase, zero train/control rounds.
  ExperimentConfig run_cfg = cfg;
  run_cfg.loop.initial_collect_steps = int(steps_for_days(cfg, cfg.simulate_days));
  run_cfg.loop.total_rounds = 0;
  run_cfg.loop.max_control_steps = 0;
  run_cfg.loop.buffer_capacity =
      std::max<size_t>(1, size_t(run_cfg.loop.initial_collect_steps));
  ExperimentRunner runner(build_run_inputs(run_cfg));
  runner.run();

  write_text_file(out_path(cfg, "episode.csv"), runner.episode_csv());
  write_text_file(out_path(cfg, "config.dump"), dump_config(cfg));
  std::cout << "simulated " << cfg.simulate_days << " day(s), "
            << run_cfg.loop.initial_collect_steps << " control intervals ("
            << to_string(cfg.mode) << ")\n"
            << "wrote " << out_path(cfg, "episode.csv") << "\n";
  return 0;
}

int cmd_eval_dynamics(ExperimentConfig cfg, const std::string& windows_flag,
                      std::optional<int> horizon, std::optional<int> traces,
                      std::optional<int> days, std::optional<int> starts) {
  if (!windows_flag.empty()) {
    std::vector<int> ws;
    for (std::string_view part : split_csv(windows_flag))
      ws.push_back(int(parse_int(part)));
    cfg.eval.windows = ws;
  }
  if (horizon) cfg.eval.horizon = *horizon;
  if (traces) cfg.eval.traces = *traces;
  if (days) cfg.eval.eval_days = *days;
  if (starts) cfg.eval.starts = *starts;
  cfg.validate();

  DeviationTable table = evaluate_dynamics(cfg);
  std::string csv = table.to_csv();
  write_text_file(out_path(cfg, "deviation.csv"), csv);
  write_text_file(out_path(cfg, "config.dump"), dump_config(cfg));
  std::cout << csv;
  return 0;
}

int cmd_run(ExperimentConfig cfg, std::optional<std::string> mode_flag,
            std::optional<int> stop_after, bool resume) {
  if (mode_flag) cfg.mode = parse_run_mode(*mode_flag);
  cfg.validate();
  RunInputs in = build_run_inputs(cfg);

  std::optional<ExperimentRunner> runner;
  std::string ckpt_path = out_path(cfg, "checkpoint.bin");
  if (resume) {
    if (!fs::exists(ckpt_path))
      throw std::runtime_error("no checkpoint to resume at " + ckpt_path);
    runner.emplace(std::move(in), read_text_file(ckpt_path));
  } else {
    runner.emplace(std::move(in));
  }
  runner->run(stop_after);

  MetricsReport rep = runner->report();
  write_text_file(out_path(cfg, "episode.csv"), runner->episode_csv());
  write_text_file(out_path(cfg, "planner.csv"), runner->planner_csv());
  write_text_file(out_path(cfg, "metrics.csv"), rep.to_csv());
  write_text_file(ckpt_path, runner->checkpoint());
  write_text_file(out_path(cfg, "config.dump"), dump_config(cfg));

  double mean_power = 0.0, mean_tvr = 0.0;
  for (double v : rep.daily_power) mean_power += v;
  for (double v : rep.daily_tvr) mean_tvr += v;
  size_t days = rep.daily_power.size();
  if (days > 0) {
    mean_power /= double(days);
    mean_tvr /= double(days);
  }
  std::cout << "mode " << to_string(cfg.mode) << ": " << runner->rounds_done()
            << " round(s), " << runner->control_steps_done() << " control steps, "
            << days << " control day(s)\n";
  if (days > 0)
    std::cout << "mean daily power " << format_double(mean_power)
              << " W, mean daily TVR " << format_double(mean_tvr) << "\n";
  std::cout << "wrote " << out_path(cfg, "metrics.csv") << "\n";
  return 0;
}

std::string run_name(const std::string& dir) {
  std::string d = dir;
  while (d.size() > 1 && d.back() == '/') d.pop_back();
  std::string name = fs::path(d).filename().string();
  return name.empty() ? d : name;
}

int cmd_report(const GlobalOpts& g, std::vector<std::string> dirs,
               std::optional<std::string> baseline) {
  std::string base_dir = baseline ? *baseline : dirs.front();
  if (std::find(dirs.begin(), dirs.end(), base_dir) == dirs.end())
    dirs.insert(dirs.begin(), base_dir);

  std::vector<std::string> names;
  std::vector<std::vector<DayMetrics>> days;
  for (const std::string& dir : dirs) {
    std::string path = (fs::path(dir) / "metrics.csv").string();
    days.push_back(parse_metrics_days(read_text_file(path)));
    names.push_back(run_name(dir));
  }
  for (size_t i = 1; i < days.size(); ++i)
    if (days[i].size() != days[0].size())
      throw std::runtime_error("mismatched day counts: " + names[0] + " has " +
                               std::to_string(days[0].size()) + " day(s), " + names[i] +
                               " has " + std::to_string(days[i].size()));
  if (days[0].empty()) throw std::runtime_error("no whole control days to compare");

  size_t base = size_t(std::find(dirs.begin(), dirs.end(), base_dir) - dirs.begin());
  std::string csv = "day";
  for (const std::string& n : names) csv += "," + n + "_power_w," + n + "_tvr";
  csv += '\n';
  for (size_t d = 0; d < days[0].size(); ++d) {
    csv += std::to_string(d);
    for (size_t i = 0; i < days.size(); ++i) {
      csv += ',' + format_double(days[i][d].power);
      csv += ',' + format_double(days[i][d].tvr);
    }
    csv += '\n';
  }
  std::vector<double> mean_power(days.size(), 0.0), mean_tvr(days.size(), 0.0);
  for (size_t i = 0; i < days.size(); ++i) {
    for (const DayMetrics& m : days[i]) {
      mean_power[i] += m.power;
      mean_tvr[i] += m.tvr;
    }
    mean_power[i] /= double(days[i].size());
    mean_tvr[i] /= double(days[i].size());
  }
  csv += "summary,mean_power_w";
  for (double v : mean_power) csv += ',' + format_double(v);
  csv += "\nsummary,mean_tvr";
  for (double v : mean_tvr) csv += ',' + format_double(v);
  csv += "\nsummary,power_reduction_vs_" + names[base];
  for (double v : mean_power)
    csv += ',' + format_double((mean_power[base] - v) / mean_power[base]);
  csv += '\n';

  std::cout << csv;
  if (g.out) {
    ExperimentConfig out_cfg;
    out_cfg.out_dir = *g.out;
    write_text_file(out_path(out_cfg, "comparison.csv"), csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-zone HVAC scheduling toolkit: learned dynamics, sampling MPC, "
               "imitation, baselines"};
  app.require_subcommand(1);

  GlobalOpts g;
  auto add_globals = [&](CLI::App* a) {
    a->add_option("--config", g.config_path, "configuration file (sectioned key=value)");
    a->add_option("--seed", g.seed, "root RNG seed override");
    a->add_option("--out", g.out, "output directory override");
  };
  add_globals(&app);

  CLI::App* sim = app.add_subcommand(
      "simulate", "run a baseline controller for N days and write the episode log");
  add_globals(sim);
  std::optional<int> sim_days;
  std::optional<std::string> sim_mode;
  sim->add_option("--days", sim_days, "days to simulate (default from config)");
  sim->add_option("--mode", sim_mode, "baseline-fixed | baseline-default");

  CLI::App* evald = app.add_subcommand(
      "eval-dynamics", "deviation table: window lengths x synthetic weather variants");
  add_globals(evald);
  std::string ev_windows;
  std::optional<int> ev_horizon, ev_traces, ev_days, ev_starts;
  evald->add_option("--windows", ev_windows, "comma-separated window lengths");
  evald->add_option("--horizon", ev_horizon, "rollout steps per evaluation start");
  evald->add_option("--traces", ev_traces, "weather variants (table rows)");
  evald->add_option("--days", ev_days, "collected days per variant");
  evald->add_option("--starts", ev_starts, "evaluation start points per cell");

  CLI::App* run = app.add_subcommand(
      "run", "full experiment: collect, then alternating train/control rounds");
  add_globals(run);
  std::optional<std::string> run_mode;
  std::optional<int> run_stop;
  bool run_resume = false;
  run->add_option("--mode", run_mode,
                  "mpc | imitation | baseline-fixed | baseline-default");
  run->add_option("--stop-after-round", run_stop,
                  "checkpoint and exit after this many completed rounds");
  run->add_flag("--resume", run_resume, "continue from <out>/checkpoint.bin");

  CLI::App* rep = app.add_subcommand(
      "report", "align per-day power/TVR across completed runs");
  add_globals(rep);
  std::vector<std::string> rep_dirs;
  std::optional<std::string> rep_base;
  rep->add_option("dirs", rep_dirs, "run output directories")->required();
  rep->add_option("--baseline", rep_base,
                  "directory whose mean power anchors the reduction column");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(effective_config(g), sim_days, sim_mode);
    if (evald->parsed())
      return cmd_eval_dynamics(effective_config(g), ev_windows, ev_horizon, ev_traces,
                               ev_days, ev_starts);
    if (run->parsed())
      return cmd_run(effective_config(g), run_mode, run_stop, run_resume);
    if (rep->parsed()) return cmd_report(g, rep_dirs, rep_base);
  } catch (const std::exception& e) {
    std::cerr << "hvacctl: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
