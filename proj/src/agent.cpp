#include "hvacmbrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::mpc: return "mpc";
    case RunMode::imitation: return "imitation";
    case RunMode::baseline_fixed: return "baseline-fixed";
    case RunMode::baseline_default: return "baseline-default";
  }
  throw std::runtime_error("unknown run mode");
}

RunMode parse_run_mode(const std::string& name) {
  if (name == "mpc") return RunMode::mpc;
  if (name == "imitation") return RunMode::imitation;
  if (name == "baseline-fixed") return RunMode::baseline_fixed;
  if (name == "baseline-default") return RunMode::baseline_default;
  throw std::runtime_error("unknown run mode '" + name +
                           "' (expected mpc | imitation | baseline-fixed | baseline-default)");
}

void LoopConfig::validate() const {
  if (initial_collect_steps < 0)
    throw std::runtime_error("loop config: initial_collect_steps must be >= 0");
  if (on_policy_steps < 1)
    throw std::runtime_error("loop config: on_policy_steps must be >= 1");
  if (epochs < 0) throw std::runtime_error("loop config: epochs must be >= 0");
  if (total_rounds < 0) throw std::runtime_error("loop config: total_rounds must be >= 0");
  if (max_control_steps < 0)
    throw std::runtime_error("loop config: max_control_steps must be >= 0");
  if (explore_half_range < 0.0 || explore_half_range > 1.0)
    throw std::runtime_error("loop config: explore_half_range must be in [0, 1]");
  if (buffer_capacity < 1)
    throw std::runtime_error("loop config: buffer_capacity must be >= 1");
}

// ---------- episode log ----------

const char kEpisodeLogHeader[] =
    "step,T_out,T_west,T_east,P_ite,P_hvac,TS_west,TS_east,F_west,F_east,reward,"
    "violation_west,violation_east";

std::string format_log_row(const LogRow& row) {
  std::string out = std::to_string(row.step);
  for (double v : {row.t_out, row.t_west, row.t_east, row.p_ite, row.p_hvac,
                   row.ts_west, row.ts_east, row.f_west, row.f_east, row.reward}) {
    out += ',';
    out += format_double(v);
  }
  out += row.violation_west ? ",1" : ",0";
  out += row.violation_east ? ",1" : ",0";
  return out;
}

LogRow parse_log_row(const std::string& line) {
  std::vector<std::string> f;
  for (std::string_view part : split_csv(line)) f.emplace_back(part);
  if (f.size() != 13)
    throw std::runtime_error("episode log row: expected 13 fields, got " +
                             std::to_string(f.size()));
  LogRow r;
  r.step = parse_int(f[0]);
  r.t_out = parse_double(f[1]);
  r.t_west = parse_double(f[2]);
  r.t_east = parse_double(f[3]);
  r.p_ite = parse_double(f[4]);
  r.p_hvac = parse_double(f[5]);
  r.ts_west = parse_double(f[6]);
  r.ts_east = parse_double(f[7]);
  r.f_west = parse_double(f[8]);
  r.f_east = parse_double(f[9]);
  r.reward = parse_double(f[10]);
  int vw = int(parse_int(f[11])), ve = int(parse_int(f[12]));
  if ((vw != 0 && vw != 1) || (ve != 0 && ve != 1))
    throw std::runtime_error("episode log row: violation flags must be 0 or 1");
  r.violation_west = vw == 1;
  r.violation_east = ve == 1;
  return r;
}

std::vector<LogRow> parse_episode_log(const std::string& text) {
  std::vector<std::string_view> lines = split_lines(text);
  if (lines.empty() || lines[0] != kEpisodeLogHeader)
    throw std::runtime_error("episode log: missing or unexpected header line");
  std::vector<LogRow> rows;
  rows.reserve(lines.size() - 1);
  for (size_t i = 1; i < lines.size(); ++i) {
    try {
      rows.push_back(parse_log_row(std::string(lines[i])));
    } catch (const std::exception& e) {
      throw std::runtime_error("episode log line " + std::to_string(i + 1) + ": " +
                               e.what());
    }
  }
  return rows;
}

// ---------- daily metrics ----------

namespace {
constexpr int kStepsPerDay = 96;
}

DailySeries daily_tvr(const std::vector<LogRow>& rows, const RewardParams& params) {
  DailySeries out;
  size_t whole = rows.size() / kStepsPerDay;
  out.partial_steps = int64_t(rows.size() - whole * kStepsPerDay);
  for (size_t d = 0; d < whole; ++d) {
    int violating = 0;
    for (size_t i = d * kStepsPerDay; i < (d + 1) * kStepsPerDay; ++i) {
      const LogRow& r = rows[i];
      if (out_of_band(r.t_west, params) || out_of_band(r.t_east, params)) ++violating;
    }
    out.values.push_back(double(violating) / double(kStepsPerDay));
  }
  return out;
}

DailySeries daily_avg_power(const std::vector<LogRow>& rows) {
  DailySeries out;
  size_t whole = rows.size() / kStepsPerDay;
  out.partial_steps = int64_t(rows.size() - whole * kStepsPerDay);
  for (size_t d = 0; d < whole; ++d) {
    double sum = 0.0;
    for (size_t i = d * kStepsPerDay; i < (d + 1) * kStepsPerDay; ++i)
      sum += rows[i].p_ite + rows[i].p_hvac;
    out.values.push_back(sum / double(kStepsPerDay));
  }
  return out;
}

std::string MetricsReport::to_csv() const {
  std::string out = "day,avg_power_w,tvr\n";
  for (size_t d = 0; d < daily_power.size(); ++d) {
    out += std::to_string(d);
    out += ',';
    out += format_double(daily_power[d]);
    out += ',';
    out += format_double(daily_tvr[d]);
    out += '\n';
  }
  double power_sum = 0.0, tvr_sum = 0.0;
  for (double v : daily_power) power_sum += v;
  for (double v : daily_tvr) tvr_sum += v;
  size_t days = daily_power.size();
  out += "summary,control_start_row," + std::to_string(control_start_row) + "\n";
  out += "summary,control_days," + std::to_string(days) + "\n";
  out += "summary,partial_day_steps," + std::to_string(partial_day_steps) + "\n";
  out += "summary,cumulative_reward," + format_double(cumulative_reward) + "\n";
  out += "summary,total_env_steps," + std::to_string(total_env_steps) + "\n";
  out += "summary,mean_daily_power," +
         format_double(days ? power_sum / double(days) : 0.0) + "\n";
  out += "summary,mean_daily_tvr," + format_double(days ? tvr_sum / double(days) : 0.0) +
         "\n";
  if (label_agreement_mse)
    out += "summary,label_agreement_mse," + format_double(*label_agreement_mse) + "\n";
  for (size_t r = 0; r < round_deviation.size(); ++r)
    out += "round," + std::to_string(r + 1) + "," + format_double(round_deviation[r]) +
           "\n";
  return out;
}

std::vector<DayMetrics> parse_metrics_days(const std::string& text) {
  std::vector<std::string_view> lines = split_lines(text);
  if (lines.empty() || lines[0] != "day,avg_power_w,tvr")
    throw std::runtime_error("metrics file: missing or unexpected header line");
  std::vector<DayMetrics> out;
  for (size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string_view> f = split_csv(lines[i]);
    if (f.empty()) continue;
    bool digits = !f[0].empty() &&
                  std::all_of(f[0].begin(), f[0].end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!digits) break;  // summary / round block
    if (f.size() != 3)
      throw std::runtime_error("metrics file line " + std::to_string(i + 1) +
                               ": expected 3 fields");
    DayMetrics m;
    m.power = parse_double(f[1]);
    m.tvr = parse_double(f[2]);
    out.push_back(m);
  }
  return out;
}

// ---------- collection ----------

namespace {

LogRow make_log_row(int64_t step, const StepResult& res, const RawAction& a) {
  LogRow row;
  row.step = step;
  row.t_out = res.obs.T_out;
  row.t_west = res.obs.T_west;
  row.t_east = res.obs.T_east;
  row.p_ite = res.obs.P_ite;
  row.p_hvac = res.obs.P_hvac;
  row.ts_west = a.TS_west;
  row.ts_east = a.TS_east;
  row.f_west = a.F_west;
  row.f_east = a.F_east;
  row.reward = res.reward;
  row.violation_west = res.violation_west;
  row.violation_east = res.violation_east;
  return row;
}

std::string format_planner_row(int64_t step, const PlanDiag& d) {
  std::string out = std::to_string(step);
  for (double v : {d.best_reward, d.worst_reward, d.mean_reward}) {
    out += ',';
    out += format_double(v);
  }
  out += ',' + std::to_string(d.feasible_count);
  out += ',' + std::to_string(d.selected_index);
  out += ',' + std::to_string(d.selected_violations);
  for (int i = 0; i < 4; ++i) {
    out += ',';
    out += format_double(d.selected_z[i]);
  }
  out += ',';
  out += format_double(d.wall_seconds);
  return out;
}

constexpr char kPlannerHeader[] =
    "step,best_reward,worst_reward,mean_reward,feasible,selected_index,"
    "selected_violations,z_ts_west,z_ts_east,z_f_west,z_f_east,wall_seconds";

}  // namespace

void collect_initial(TwoZoneEnv& env, int steps, const SafeActionSpace& space,
                     double explore_half_range, Rng& rng, ExperienceBuffer& buffer,
                     std::vector<std::string>* log_rows) {
  if (steps < 0) throw std::runtime_error("collection steps must be >= 0");
  if (env.remaining_steps() < steps)
    throw std::runtime_error("trace too short: collection needs " + std::to_string(steps) +
                             " control intervals, traces cover " +
                             std::to_string(env.remaining_steps()));
  for (int i = 0; i < steps; ++i) {
    Eigen::Vector4d z;
    for (int c = 0; c < kActDim; ++c)
      z[c] = rng.uniform(-explore_half_range, explore_half_range);
    RawAction a = decode_action(NormalizedAction{z}, env.last_action(), space);
    TrajectoryStep ts;
    ts.obs = env.current_obs().vec();
    ts.act = a.vec();
    ts.episode_id = 0;
    ts.step_index = env.step_count();
    int64_t step = env.step_count();
    StepResult res = env.step(a);
    buffer.append(std::move(ts));
    if (log_rows) log_rows->push_back(format_log_row(make_log_row(step, res, a)));
  }
}

// ---------- experiment runner ----------

namespace {

PolicyConfig policy_config_from(const ModelConfig& m) {
  PolicyConfig p;
  p.window = m.window;
  p.obs_dim = m.obs_dim;
  p.act_dim = m.act_dim;
  p.arch = m.arch;
  p.attention = m.attention;
  p.hidden_size = m.hidden_size;
  p.learning_rate = m.learning_rate;
  p.batch_size = m.batch_size;
  p.epochs = m.epochs;
  return p;
}

DynamicsModel make_run_model(const RunInputs& in) {
  Rng r = named_stream(in.seed, RngStream::init_dynamics);
  return DynamicsModel::make(in.model, r);
}

PolicyModel make_run_policy(const RunInputs& in) {
  Rng r = named_stream(in.seed, RngStream::init_policy);
  PolicyModel p = PolicyModel::make(policy_config_from(in.model), r);
  // Zero the output head so a fresh policy holds the previous action.
  const NetLayout& layout = p.net.layout;
  for (size_t i = layout.spans.size() - 2; i < layout.spans.size(); ++i) {
    const TensorSpan& t = layout.spans[i];
    p.net.theta.segment(t.offset, t.size()).setZero();
  }
  return p;
}

void put_blob(std::string& out, const std::string& blob) { put_bytes(out, blob); }

std::string read_blob(BinReader& r) {
  uint64_t n = r.u64();
  return std::string(r.bytes(size_t(n)));
}

void put_rng(std::string& out, const Rng& rng) {
  for (uint64_t w : rng.state()) put_u64(out, w);
}

void read_rng(BinReader& r, Rng& rng) {
  std::array<uint64_t, 4> st{};
  for (auto& w : st) w = r.u64();
  rng.set_state(st);
}

void put_rows(std::string& out, const std::vector<std::string>& rows) {
  put_u64(out, rows.size());
  for (const std::string& s : rows) put_bytes(out, s);
}

std::vector<std::string> read_rows(BinReader& r) {
  uint64_t n = r.u64();
  std::vector<std::string> rows;
  rows.reserve(size_t(n));
  for (uint64_t i = 0; i < n; ++i) rows.push_back(read_blob(r));
  return rows;
}

}  // namespace

ExperimentRunner::ExperimentRunner(RunInputs inputs)
    : in_(std::move(inputs)),
      env_(in_.plant, in_.reward, in_.env, in_.weather, in_.ite),
      buffer_(in_.loop.buffer_capacity),
      model_(make_run_model(in_)),
      policy_(make_run_policy(in_)),
      imitation_(in_.loop.buffer_capacity),
      rng_collect_(named_stream(in_.seed, RngStream::collect)),
      rng_planner_(named_stream(in_.seed, RngStream::planner)),
      rng_train_dyn_(named_stream(in_.seed, RngStream::train_dynamics)),
      rng_train_pol_(named_stream(in_.seed, RngStream::train_policy)) {
  in_.loop.validate();
  in_.space.validate();
  in_.plan.validate();
  in_.model.validate();
}

ExperimentRunner::ExperimentRunner(RunInputs inputs, const std::string& checkpoint)
    : ExperimentRunner(std::move(inputs)) {
  BinReader r(checkpoint);
  if (r.bytes(4) != "HVCK") throw std::runtime_error("run checkpoint: bad magic");
  if (r.u64() != 1) throw std::runtime_error("run checkpoint: unsupported version");
  uint64_t fp = r.u64();
  if (fp != in_.config_fingerprint)
    throw std::runtime_error(
        "run checkpoint was written with a different configuration (fingerprint "
        "mismatch)");
  if (r.u64() != uint64_t(in_.mode))
    throw std::runtime_error("run checkpoint was written for a different mode");
  collected_ = r.u64() != 0;
  rounds_done_ = int(r.i64());
  control_steps_done_ = r.i64();
  label_sse_ = r.f64();
  label_count_ = r.i64();
  env_.restore_state(read_blob(r));
  buffer_ = ExperienceBuffer::deserialize(read_blob(r));
  model_ = deserialize_dynamics(read_blob(r));
  policy_ = deserialize_policy(read_blob(r));
  imitation_ = ImitationBuffer::deserialize(read_blob(r));
  read_rng(r, rng_collect_);
  read_rng(r, rng_planner_);
  read_rng(r, rng_train_dyn_);
  read_rng(r, rng_train_pol_);
  log_rows_ = read_rows(r);
  planner_rows_ = read_rows(r);
  uint64_t nd = r.u64();
  round_deviation_.clear();
  for (uint64_t i = 0; i < nd; ++i) round_deviation_.push_back(r.f64());
  if (!r.done()) throw std::runtime_error("checkpoint blob has trailing bytes");
}

std::string ExperimentRunner::checkpoint() const {
  std::string out;
  out.append("HVCK", 4);
  put_u64(out, 1);  // format version
  put_u64(out, in_.config_fingerprint);
  put_u64(out, uint64_t(in_.mode));
  put_u64(out, collected_ ? 1 : 0);
  put_i64(out, rounds_done_);
  put_i64(out, control_steps_done_);
  put_f64(out, label_sse_);
  put_i64(out, label_count_);
  put_blob(out, env_.serialize_state());
  put_blob(out, buffer_.serialize());
  put_blob(out, serialize_dynamics(model_));
  put_blob(out, serialize_policy(policy_));
  put_blob(out, imitation_.serialize());
  put_rng(out, rng_collect_);
  put_rng(out, rng_planner_);
  put_rng(out, rng_train_dyn_);
  put_rng(out, rng_train_pol_);
  put_rows(out, log_rows_);
  put_rows(out, planner_rows_);
  put_u64(out, round_deviation_.size());
  for (double d : round_deviation_) put_f64(out, d);
  return out;
}

HistoryWindow ExperimentRunner::history_window() const {
  int W = in_.model.window;
  if (buffer_.size() < size_t(W - 1))
    throw std::runtime_error("not enough history for a planning window");
  HistoryWindow h;
  h.obs.resize(W, kObsDim);
  h.acts.resize(W - 1, kActDim);
  size_t n = buffer_.size();
  for (int i = 0; i < W - 1; ++i) {
    const TrajectoryStep& s = buffer_.at(n - size_t(W - 1) + size_t(i));
    h.obs.row(i) = s.obs.transpose();
    h.acts.row(i) = s.act.transpose();
  }
  h.obs.row(W - 1) = env_.current_obs().vec().transpose();
  return h;
}

StepResult ExperimentRunner::execute_action(const RawAction& action,
                                            const PlanDiag* diag) {
  TrajectoryStep ts;
  ts.obs = env_.current_obs().vec();
  ts.act = action.vec();
  ts.episode_id = 0;
  ts.step_index = env_.step_count();
  int64_t step = env_.step_count();
  StepResult res = env_.step(action);
  if (res.done) throw std::runtime_error("trace exhausted mid-run");
  buffer_.append(std::move(ts));
  log_rows_.push_back(format_log_row(make_log_row(step, res, action)));
  if (diag) planner_rows_.push_back(format_planner_row(step, *diag));
  return res;
}

RawAction ExperimentRunner::choose_mpc_action(PlanDiag* diag) {
  HistoryWindow hist = history_window();
  RawAction a_prev = env_.last_action();
  if (hooks.act_override) return hooks.act_override(hist, a_prev, rng_planner_, diag);
  PlanResult pr =
      plan(model_, hist, a_prev, in_.plan, in_.reward, in_.space, rng_planner_);
  if (diag) *diag = pr.diag;
  return pr.action;
}

void ExperimentRunner::record_round_deviation() {
  int W = in_.model.window;
  const int Hd = 96;
  size_t n = buffer_.size();
  if (n < size_t(W + Hd)) {
    round_deviation_.push_back(std::numeric_limits<double>::quiet_NaN());
    return;
  }
  size_t end = n - size_t(Hd);
  Eigen::MatrixXd obs_hist(W, kObsDim), act_hist(W - 1, kActDim);
  for (int i = 0; i < W; ++i)
    obs_hist.row(i) = buffer_.at(end - size_t(W) + size_t(i)).obs.transpose();
  for (int i = 0; i < W - 1; ++i)
    act_hist.row(i) = buffer_.at(end - size_t(W) + size_t(i)).act.transpose();
  Eigen::MatrixXd future(Hd, kActDim), truth(Hd, kObsDim);
  for (int h = 0; h < Hd; ++h) {
    future.row(h) = buffer_.at(end - 1 + size_t(h)).act.transpose();
    truth.row(h) = buffer_.at(end + size_t(h)).obs.transpose();
  }
  try {
    Eigen::MatrixXd preds = open_loop_rollout(model_, obs_hist, act_hist, future);
    round_deviation_.push_back(deviation(preds, truth));
  } catch (const std::exception&) {
    round_deviation_.push_back(std::numeric_limits<double>::quiet_NaN());
  }
}

void ExperimentRunner::run_round() {
  int budget = in_.loop.on_policy_steps;
  if (in_.loop.max_control_steps > 0)
    budget = int(std::min<int64_t>(budget,
                                   in_.loop.max_control_steps - control_steps_done_));
  if (budget <= 0) return;

  bool trains = in_.mode == RunMode::mpc || in_.mode == RunMode::imitation;
  if (trains) {
    model_.config.epochs = in_.loop.epochs;
    policy_.config.epochs = in_.loop.epochs;
    train_dynamics(model_, buffer_, rng_train_dyn_);
    record_round_deviation();
    if (in_.mode == RunMode::imitation && imitation_.size() > 0)
      train_policy(policy_, imitation_, rng_train_pol_);
  }

  for (int i = 0; i < budget; ++i) {
    switch (in_.mode) {
      case RunMode::mpc: {
        PlanDiag diag;
        RawAction a = choose_mpc_action(&diag);
        execute_action(a, &diag);
        break;
      }
      case RunMode::imitation: {
        HistoryWindow hist = history_window();
        RawAction a_prev = env_.last_action();
        Eigen::Vector4d z_pol = policy_forward(policy_, hist.obs);
        RawAction a = decode_action(NormalizedAction{z_pol}, a_prev, in_.space);
        execute_action(a, nullptr);
        // Offline label from the planner on the same pre-step window,
        // using this round's frozen dynamics weights.
        PlanResult lab =
            plan(model_, hist, a_prev, in_.plan, in_.reward, in_.space, rng_planner_);
        imitation_.append(LabeledWindow{hist.obs, lab.diag.selected_z});
        label_sse_ += (z_pol - lab.diag.selected_z).squaredNorm();
        label_count_ += 1;
        break;
      }
      case RunMode::baseline_fixed:
        execute_action(in_.space.default_start(), nullptr);
        break;
      case RunMode::baseline_default: {
        Eigen::Vector4d z;
        for (int c = 0; c < kActDim; ++c)
          z[c] = rng_collect_.uniform(-in_.loop.explore_half_range,
                                      in_.loop.explore_half_range);
        RawAction a = decode_action(NormalizedAction{z}, env_.last_action(), in_.space);
        execute_action(a, nullptr);
        break;
      }
    }
    ++control_steps_done_;
  }
}

void ExperimentRunner::run(std::optional<int> stop_after_round) {
  int64_t control_budget = int64_t(in_.loop.total_rounds) * in_.loop.on_policy_steps;
  if (in_.loop.max_control_steps > 0)
    control_budget = std::min<int64_t>(control_budget, in_.loop.max_control_steps);
  int64_t needed = (collected_ ? 0 : in_.loop.initial_collect_steps) +
                   (control_budget - control_steps_done_);
  if (env_.remaining_steps() < needed)
    throw std::runtime_error("trace too short: run needs " + std::to_string(needed) +
                             " control intervals, traces cover " +
                             std::to_string(env_.remaining_steps()));

  if (!collected_) {
    int steps = in_.loop.initial_collect_steps;
    if (in_.mode == RunMode::baseline_fixed) {
      for (int i = 0; i < steps; ++i) execute_action(in_.space.default_start(), nullptr);
    } else {
      collect_initial(env_, steps, in_.space, in_.loop.explore_half_range, rng_collect_,
                      buffer_, &log_rows_);
    }
    collected_ = true;
  }
  if (stop_after_round && rounds_done_ >= *stop_after_round) return;

  while (rounds_done_ < in_.loop.total_rounds) {
    if (in_.loop.max_control_steps > 0 &&
        control_steps_done_ >= in_.loop.max_control_steps)
      break;
    run_round();
    ++rounds_done_;
    if (stop_after_round && rounds_done_ >= *stop_after_round) return;
  }
}

MetricsReport ExperimentRunner::report() const {
  MetricsReport r;
  r.control_start_row = in_.loop.initial_collect_steps;
  std::vector<LogRow> rows;
  rows.reserve(log_rows_.size());
  for (const std::string& line : log_rows_) rows.push_back(parse_log_row(line));
  std::vector<LogRow> control(
      rows.begin() + std::min<ptrdiff_t>(ptrdiff_t(rows.size()), r.control_start_row),
      rows.end());
  DailySeries tvr = daily_tvr(control, in_.reward);
  DailySeries power = daily_avg_power(control);
  r.daily_tvr = tvr.values;
  r.daily_power = power.values;
  r.partial_day_steps = tvr.partial_steps;
  for (const LogRow& row : control) r.cumulative_reward += row.reward;
  r.round_deviation = round_deviation_;
  if (in_.mode == RunMode::imitation && label_count_ > 0)
    r.label_agreement_mse = label_sse_ / (double(label_count_) * double(kActDim));
  r.total_env_steps = env_.step_count();
  return r;
}

std::string ExperimentRunner::episode_csv() const {
  std::string out = kEpisodeLogHeader;
  out += '\n';
  for (const std::string& line : log_rows_) {
    out += line;
    out += '\n';
  }
  return out;
}

std::string ExperimentRunner::planner_csv() const {
  std::string out = kPlannerHeader;
  out += '\n';
  for (const std::string& line : planner_rows_) {
    out += line;
    out += '\n';
  }
  return out;
}

}  // namespace hvacmbrl
