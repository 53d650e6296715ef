#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "hvacmbrl/agent.hpp"
#include "hvacmbrl/numio.hpp"
#include "hvacmbrl/config.hpp"

using namespace hvacmbrl;

namespace {

LogRow make_row(int64_t step, double t_west, double t_east, double p_ite,
                double p_hvac) {
  LogRow r;
  r.step = step;
  r.t_out = 24.0;
  r.t_west = t_west;
  r.t_east = t_east;
  r.p_ite = p_ite;
  r.p_hvac = p_hvac;
  r.ts_west = 23.5;
  r.ts_east = 23.5;
  r.f_west = 6.25;
  r.f_east = 6.25;
  r.reward = -2.0;
  RewardParams rp;
  r.violation_west = out_of_band(t_west, rp);
  r.violation_east = out_of_band(t_east, rp);
  return r;
}

RunInputs tiny_inputs(RunMode mode, uint64_t seed = 11) {
  RunInputs in;
  in.mode = mode;
  in.seed = seed;
  in.config_fingerprint = 0x5eed;
  WeatherGenParams wp;
  wp.days = 2.0;
  in.weather = gen_weather(wp, named_stream(seed, RngStream::weather));
  IteGenParams ip;
  ip.day_count = 2;
  in.ite = gen_ite_load(ip, named_stream(seed, RngStream::ite_load));
  in.model.window = 4;
  in.model.hidden_size = 8;
  in.model.batch_size = 16;
  in.model.epochs = 2;
  in.plan.horizon = 2;
  in.plan.samples = 16;
  in.loop.initial_collect_steps = 24;
  in.loop.on_policy_steps = 8;
  in.loop.epochs = 2;
  in.loop.total_rounds = 2;
  in.loop.max_control_steps = 16;
  in.loop.buffer_capacity = 256;
  return in;
}

TwoZoneEnv make_env(uint64_t seed = 11, double days = 2.0) {
  WeatherGenParams wp;
  wp.days = days;
  IteGenParams ip;
  ip.day_count = int64_t(days);
  return TwoZoneEnv(PlantParams{}, RewardParams{}, EnvConfig{},
                    gen_weather(wp, named_stream(seed, RngStream::weather)),
                    gen_ite_load(ip, named_stream(seed, RngStream::ite_load)));
}

}  // namespace

TEST_SUITE("agent") {

TEST_CASE("log rows survive a format and parse round trip") {
  LogRow r;
  r.step = 41;
  r.t_out = 31.0625;
  r.t_west = 24.973214285714285;
  r.t_east = 22.0;
  r.p_ite = 48123.75;
  r.p_hvac = 1877.2099609375;
  r.ts_west = 13.5;
  r.ts_east = 23.5;
  r.f_west = 2.5;
  r.f_east = 9.999999999999998;
  r.reward = -3.0517578125e-05;
  r.violation_west = true;
  r.violation_east = false;
  LogRow back = parse_log_row(format_log_row(r));
  CHECK(back.step == r.step);
  CHECK(back.t_out == r.t_out);
  CHECK(back.t_west == r.t_west);
  CHECK(back.t_east == r.t_east);
  CHECK(back.p_ite == r.p_ite);
  CHECK(back.p_hvac == r.p_hvac);
  CHECK(back.ts_west == r.ts_west);
  CHECK(back.ts_east == r.ts_east);
  CHECK(back.f_west == r.f_west);
  CHECK(back.f_east == r.f_east);
  CHECK(back.reward == r.reward);
  CHECK(back.violation_west == r.violation_west);
  CHECK(back.violation_east == r.violation_east);
}

TEST_CASE("episode log parsing is strict") {
  CHECK_THROWS_WITH_AS(parse_episode_log("step,wrong\n1,2\n"),
                       doctest::Contains("header"), std::runtime_error);
  std::string ok = std::string(kEpisodeLogHeader) + "\n" +
                   "0,24,23.5,23.5,100,50,23.5,23.5,6.25,6.25,-2,0,0\n";
  CHECK(parse_episode_log(ok).size() == 1);
  CHECK_THROWS_WITH_AS(parse_log_row("1,2,3"), doctest::Contains("expected 13 fields"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_log_row("0,24,23.5,23.5,100,50,23.5,23.5,6.25,6.25,-2,2,0"),
      doctest::Contains("violation flags"), std::runtime_error);
  std::string bad = std::string(kEpisodeLogHeader) + "\n" +
                    "0,24,23.5,23.5,100,50,23.5,23.5,6.25,6.25,-2,0,0\n" +
                    "oops,24,23.5,23.5,100,50,23.5,23.5,6.25,6.25,-2,0,0\n";
  CHECK_THROWS_WITH_AS(parse_episode_log(bad), doctest::Contains("line 3"),
                       std::runtime_error);
}

TEST_CASE("daily temperature violation rate counts each step once") {
  RewardParams rp;
  std::vector<LogRow> rows;
  for (int j = 0; j < 96; ++j) {
    // first 24 steps: both zones out of band, still one violation per step
    double tw = j < 24 ? 25.5 : 23.5;
    double te = j < 24 ? 21.0 : 23.5;
    rows.push_back(make_row(j, tw, te, 100.0, 50.0));
  }
  DailySeries tvr = daily_tvr(rows, rp);
  REQUIRE(tvr.values.size() == 1);
  CHECK(tvr.values[0] == 0.25);
  CHECK(tvr.partial_steps == 0);

  for (int j = 0; j < 4; ++j) rows.push_back(make_row(96 + j, 26.0, 23.5, 1.0, 1.0));
  DailySeries tvr2 = daily_tvr(rows, rp);
  REQUIRE(tvr2.values.size() == 1);  // partial day excluded
  CHECK(tvr2.values[0] == 0.25);
  CHECK(tvr2.partial_steps == 4);

  // band edges are inclusive
  std::vector<LogRow> edge;
  for (int j = 0; j < 96; ++j) edge.push_back(make_row(j, 25.0, 22.0, 0.0, 0.0));
  CHECK(daily_tvr(edge, rp).values[0] == 0.0);
}

TEST_CASE("daily average power is the per-day mean of total power") {
  std::vector<LogRow> rows;
  for (int j = 0; j < 96; ++j) rows.push_back(make_row(j, 23.5, 23.5, 100.0, 50.0));
  for (int j = 0; j < 96; ++j)
    rows.push_back(make_row(96 + j, 23.5, 23.5, 100.0 + j, 50.0));
  DailySeries p = daily_avg_power(rows);
  REQUIRE(p.values.size() == 2);
  CHECK(p.values[0] == 150.0);
  double sum = 0.0;
  for (int j = 0; j < 96; ++j) sum += (100.0 + j) + 50.0;
  CHECK(p.values[1] == sum / 96.0);
}

TEST_CASE("metrics csv lists days and summary lines and reparses") {
  MetricsReport rep;
  rep.daily_power = {1.5, 2.5};
  rep.daily_tvr = {0.0, 0.25};
  rep.round_deviation = {0.5, std::nan("")};
  rep.cumulative_reward = -3.5;
  rep.control_start_row = 96;
  rep.total_env_steps = 288;
  rep.partial_day_steps = 0;
  std::string csv = rep.to_csv();
  CHECK(csv.find("day,avg_power_w,tvr\n0,1.5,0\n1,2.5,0.25\n") != std::string::npos);
  CHECK(csv.find("summary,control_start_row,96\n") != std::string::npos);
  CHECK(csv.find("summary,control_days,2\n") != std::string::npos);
  CHECK(csv.find("summary,cumulative_reward,-3.5\n") != std::string::npos);
  CHECK(csv.find("summary,mean_daily_power,2\n") != std::string::npos);
  CHECK(csv.find("summary,mean_daily_tvr,0.125\n") != std::string::npos);
  CHECK(csv.find("label_agreement_mse") == std::string::npos);
  CHECK(csv.find("round,1,0.5\n") != std::string::npos);
  CHECK(csv.find("round,2,nan\n") != std::string::npos);
  auto days = parse_metrics_days(csv);
  REQUIRE(days.size() == 2);
  CHECK(days[0].power == 1.5);
  CHECK(days[1].tvr == 0.25);
  CHECK_THROWS_WITH_AS(parse_metrics_days("bogus\n"), doctest::Contains("header"),
                       std::runtime_error);

  rep.label_agreement_mse = 0.125;
  CHECK(rep.to_csv().find("summary,label_agreement_mse,0.125\n") != std::string::npos);
}

TEST_CASE("initial collection explores inside the safe envelope") {
  TwoZoneEnv env = make_env();
  SafeActionSpace space;
  ExperienceBuffer buf(64);
  std::vector<std::string> lines;
  Rng rng(21);
  collect_initial(env, 12, space, 0.3, rng, buf, &lines);
  REQUIRE(buf.size() == 12);
  REQUIRE(lines.size() == 12);
  Eigen::Vector4d prev = space.default_start().vec();
  for (size_t i = 0; i < lines.size(); ++i) {
    LogRow row = parse_log_row(lines[i]);
    CHECK(row.step == int64_t(i));
    Eigen::Vector4d a(row.ts_west, row.ts_east, row.f_west, row.f_east);
    for (int c = 0; c < 4; ++c) {
      CHECK(a[c] >= space.a_min[c]);
      CHECK(a[c] <= space.a_max[c]);
      CHECK(std::abs(a[c] - prev[c]) <= space.delta[c]);
    }
    CHECK(buf.at(i).act.cwiseEqual(a).all());
    // the buffer pairs each action with the observation it was chosen from,
    // so row i's outcome is the next buffered observation
    if (i + 1 < buf.size()) CHECK(buf.at(i + 1).obs[1] == row.t_west);
    CHECK(buf.at(i).step_index == int64_t(i));
    prev = a;
  }
}

TEST_CASE("collection refuses to start without trace coverage") {
  TwoZoneEnv env = make_env();
  SafeActionSpace space;
  ExperienceBuffer buf(64);
  Rng rng(21);
  CHECK_THROWS_WITH_AS(collect_initial(env, 100000, space, 0.3, rng, buf, nullptr),
                       doctest::Contains("trace too short"), std::runtime_error);
  CHECK(buf.size() == 0);
  CHECK(env.step_count() == 0);
  CHECK_NOTHROW(collect_initial(env, 0, space, 0.3, rng, buf, nullptr));
  CHECK(buf.size() == 0);
}

TEST_CASE("the fixed baseline holds the default action at every step") {
  RunInputs in = tiny_inputs(RunMode::baseline_fixed);
  in.loop.initial_collect_steps = 4;
  in.loop.total_rounds = 1;
  in.loop.on_policy_steps = 8;
  in.loop.max_control_steps = 8;
  ExperimentRunner runner(in);
  runner.run();
  auto rows = parse_episode_log(runner.episode_csv());
  REQUIRE(rows.size() == 12);
  for (size_t i = 4; i < rows.size(); ++i) {
    CHECK(rows[i].ts_west == 23.5);
    CHECK(rows[i].ts_east == 23.5);
    CHECK(rows[i].f_west == 6.25);
    CHECK(rows[i].f_east == 6.25);
  }
  std::string pcsv = runner.planner_csv();
  auto plan_lines = split_lines(pcsv);
  REQUIRE(plan_lines.size() == 1);  // header only: no planner involved
  CHECK(plan_lines[0].substr(0, 16) == "step,best_reward");
  MetricsReport rep = runner.report();
  CHECK(rep.control_start_row == 4);
  CHECK(rep.total_env_steps == 12);
  CHECK(rep.daily_power.empty());
  CHECK(rep.partial_day_steps == 8);
}

TEST_CASE("the experience buffer keeps only the newest transitions") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  in.loop.buffer_capacity = 16;
  in.loop.total_rounds = 0;
  ExperimentRunner runner(in);
  runner.run();
  CHECK(runner.buffer().size() == 16);
  CHECK(runner.buffer().at(0).step_index == 8);  // 24 collected, oldest 8 evicted
  CHECK(runner.report().total_env_steps == 24);
}

TEST_CASE("a full tiny control run recomputes its own metrics bitwise") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  ExperimentRunner runner(in);
  runner.run();
  MetricsReport rep = runner.report();
  auto rows = parse_episode_log(runner.episode_csv());
  CHECK(int64_t(rows.size()) == rep.total_env_steps);
  REQUIRE(rep.control_start_row == 24);
  std::vector<LogRow> control(rows.begin() + 24, rows.end());
  RewardParams rp;
  DailySeries tvr = daily_tvr(control, rp);
  DailySeries pw = daily_avg_power(control);
  CHECK(tvr.values == rep.daily_tvr);
  CHECK(pw.values == rep.daily_power);
  CHECK(tvr.partial_steps == rep.partial_day_steps);
  double cum = 0.0;
  for (const LogRow& r : control) cum += r.reward;
  CHECK(cum == rep.cumulative_reward);
  CHECK(runner.control_steps_done() == 16);
  CHECK(runner.rounds_done() == 2);
  CHECK(rep.round_deviation.size() == 2);
}

TEST_CASE("whole-day metrics recompute bitwise on a day-long baseline") {
  RunInputs in = tiny_inputs(RunMode::baseline_fixed);
  in.loop.initial_collect_steps = 0;
  in.loop.total_rounds = 1;
  in.loop.on_policy_steps = 96;
  in.loop.max_control_steps = 96;
  ExperimentRunner runner(in);
  runner.run();
  MetricsReport rep = runner.report();
  REQUIRE(rep.daily_power.size() == 1);
  auto rows = parse_episode_log(runner.episode_csv());
  RewardParams rp;
  CHECK(daily_avg_power(rows).values == rep.daily_power);
  CHECK(daily_tvr(rows, rp).values == rep.daily_tvr);
  CHECK(rep.partial_day_steps == 0);
  auto days = parse_metrics_days(rep.to_csv());
  REQUIRE(days.size() == 1);
  CHECK(days[0].power == rep.daily_power[0]);
  CHECK(days[0].tvr == rep.daily_tvr[0]);
}

TEST_CASE("a checkpoint resumes byte-identically") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  ExperimentRunner straight(in);
  straight.run();

  for (int stop : {0, 1}) {
    ExperimentRunner part(in);
    part.run(stop);
    CHECK(part.rounds_done() == stop);
    std::string blob = part.checkpoint();
    ExperimentRunner resumed(in, blob);
    CHECK(resumed.rounds_done() == stop);
    resumed.run();
    CHECK(resumed.episode_csv() == straight.episode_csv());
    CHECK(resumed.report().to_csv() == straight.report().to_csv());
    CHECK(parse_episode_log(resumed.episode_csv()).size() == 40);
  }
}

TEST_CASE("checkpoints refuse mismatched configuration or mode") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  ExperimentRunner part(in);
  part.run(1);
  std::string blob = part.checkpoint();

  RunInputs other = in;
  other.config_fingerprint += 1;
  CHECK_THROWS_WITH_AS(ExperimentRunner(other, blob), doctest::Contains("fingerprint"),
                       std::runtime_error);
  RunInputs swapped = in;
  swapped.mode = RunMode::baseline_fixed;
  CHECK_THROWS_WITH_AS(ExperimentRunner(swapped, blob),
                       doctest::Contains("different mode"), std::runtime_error);
  CHECK_THROWS_WITH_AS(ExperimentRunner(in, blob.substr(0, 10)),
                       doctest::Contains("truncated"), std::runtime_error);
  std::string bad = blob;
  bad[0] = 'x';
  CHECK_THROWS_WITH_AS(ExperimentRunner(in, bad), doctest::Contains("bad magic"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(ExperimentRunner(in, blob + "?"), doctest::Contains("trailing"),
                       std::runtime_error);
}

TEST_CASE("an action override replaces the planner") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  ExperimentRunner runner(in);
  NormalizedAction push{Eigen::Vector4d(-1.0, 0.0, 0.0, 1.0)};
  runner.hooks.act_override = [&](const HistoryWindow&, const RawAction& a_prev, Rng&,
                                  PlanDiag*) {
    return decode_action(push, a_prev, in.space);
  };
  runner.run();
  auto rows = parse_episode_log(runner.episode_csv());
  // the override chains off the last exploratory action, not the default
  RawAction expect{rows[23].ts_west, rows[23].ts_east, rows[23].f_west,
                   rows[23].f_east};
  for (size_t i = 24; i < rows.size(); ++i) {
    expect = decode_action(push, expect, in.space);
    CHECK(rows[i].ts_west == expect.TS_west);
    CHECK(rows[i].f_east == expect.F_east);
  }
  // planner diagnostics still logged once per control step
  std::string pcsv = runner.planner_csv();
  CHECK(split_lines(pcsv).size() == 1 + 16);
}

TEST_CASE("imitation mode learns labels and reports agreement") {
  RunInputs in = tiny_inputs(RunMode::imitation);
  ExperimentRunner runner(in);
  runner.run();
  CHECK(runner.imitation_buffer().size() == 16);
  MetricsReport rep = runner.report();
  REQUIRE(rep.label_agreement_mse.has_value());
  CHECK(std::isfinite(*rep.label_agreement_mse));
  CHECK(*rep.label_agreement_mse >= 0.0);
  CHECK(split_lines(runner.planner_csv()).size() == 1);  // header only
  auto rows = parse_episode_log(runner.episode_csv());
  CHECK(rows.size() == 40);
  // executed actions still honor the envelope
  Eigen::Vector4d prev = in.space.default_start().vec();
  SafeActionSpace space;
  for (size_t i = 0; i < rows.size(); ++i) {
    Eigen::Vector4d a(rows[i].ts_west, rows[i].ts_east, rows[i].f_west, rows[i].f_east);
    for (int c = 0; c < 4; ++c) {
      CHECK(a[c] >= space.a_min[c]);
      CHECK(a[c] <= space.a_max[c]);
      CHECK(std::abs(a[c] - prev[c]) <= space.delta[c]);
    }
    prev = a;
  }
}

TEST_CASE("runs fail fast when the traces cannot cover the schedule") {
  RunInputs in = tiny_inputs(RunMode::mpc);
  in.loop.on_policy_steps = 96;
  in.loop.total_rounds = 2;
  in.loop.max_control_steps = 0;  // uncapped: needs 24 + 192 > 2 days of trace
  ExperimentRunner runner(in);
  CHECK_THROWS_WITH_AS(runner.run(), doctest::Contains("trace too short"),
                       std::runtime_error);
  CHECK(runner.report().total_env_steps == 0);
}

TEST_CASE("run modes parse and print consistently") {
  for (RunMode m : {RunMode::mpc, RunMode::imitation, RunMode::baseline_fixed,
                    RunMode::baseline_default}) {
    CHECK(parse_run_mode(to_string(m)) == m);
  }
  CHECK(to_string(RunMode::baseline_fixed) == "baseline-fixed");
  CHECK_THROWS_WITH_AS(parse_run_mode("nonsense"), doctest::Contains("unknown run mode"),
                       std::runtime_error);
}

TEST_CASE("loop config validation") {
  LoopConfig c;
  CHECK_NOTHROW(c.validate());
  c.initial_collect_steps = -1;
  CHECK_THROWS_AS(c.validate(), std::runtime_error);
  c = LoopConfig{};
  c.on_policy_steps = 0;
  CHECK_THROWS_AS(c.validate(), std::runtime_error);
  c = LoopConfig{};
  c.explore_half_range = 1.5;
  CHECK_THROWS_AS(c.validate(), std::runtime_error);
  c = LoopConfig{};
  c.buffer_capacity = 0;
  CHECK_THROWS_AS(c.validate(), std::runtime_error);
}

}  // TEST_SUITE
