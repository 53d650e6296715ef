#include "hvacmbrl/environment.hpp"

#include <cmath>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

// 1 W = 3.412141633 Btu/h.
static constexpr double kWattToBtuPerMin = 3.412141633 / 60.0;

TwoZoneEnv::TwoZoneEnv(PlantParams plant, RewardParams rew, EnvConfig cfg,
                       Trace weather, Trace ite_load)
    : plant_(plant),
      reward_(rew),
      cfg_(cfg),
      weather_(std::move(weather)),
      ite_(std::move(ite_load)),
      west_(cfg.init_west),
      east_(cfg.init_east) {
  plant_.validate();
  if (weather_.kind != TraceKind::weather || ite_.kind != TraceKind::ite_load)
    throw std::runtime_error("TwoZoneEnv: trace kinds swapped");
  double n_sub = cfg_.control_dt_minutes / plant_.dt_minutes;
  if (std::abs(n_sub - std::round(n_sub)) > 1e-9)
    throw std::runtime_error("TwoZoneEnv: control interval must be a whole number of sub-steps");
  last_action_ = RawAction{};
  current_obs_ = instantaneous_obs(last_action_);
}

ControlInput TwoZoneEnv::local_loop(double T3_c, double setpoint_c, double fan_scale) const {
  ControlInput u;
  u.f = plant_.cfm_base + plant_.cfm_per_unit * fan_scale;
  u.gpm = std::clamp(plant_.gpm_kp * (T3_c - setpoint_c), 0.0, plant_.gpm_max);
  return u;
}

Observation TwoZoneEnv::instantaneous_obs(const RawAction& action) const {
  size_t wi = weather_.index_at(minutes_);
  size_t li = ite_.index_at(minutes_);
  Observation o;
  o.T_out = weather_.col0[wi];
  o.T_west = west_.T_3;
  o.T_east = east_.T_3;
  o.P_ite = ite_.col0[li];
  ControlInput uw = local_loop(west_.T_3, action.TS_west, action.F_west);
  ControlInput ue = local_loop(east_.T_3, action.TS_east, action.F_east);
  o.P_hvac = hvac_power(uw, plant_) + hvac_power(ue, plant_);
  return o;
}

bool TwoZoneEnv::can_step() const {
  double need = minutes_ + cfg_.control_dt_minutes;
  return need <= weather_.end_minute() + 1e-9 && need <= ite_.end_minute() + 1e-9;
}

int64_t TwoZoneEnv::remaining_steps() const {
  double end = std::min(weather_.end_minute(), ite_.end_minute());
  double left = end + 1e-9 - minutes_;
  if (left < 0.0) return 0;
  return static_cast<int64_t>(std::floor(left / cfg_.control_dt_minutes));
}

StepResult TwoZoneEnv::step(const RawAction& action) {
  StepResult res;
  if (!can_step()) {
    res.obs = current_obs_;
    res.done = true;
    return res;
  }
  auto n_sub = static_cast<int>(std::llround(cfg_.control_dt_minutes / plant_.dt_minutes));
  double sum_T_out = 0.0, sum_T_west = 0.0, sum_T_east = 0.0;
  double sum_P_ite = 0.0, sum_P_hvac = 0.0;
  for (int i = 0; i < n_sub; ++i) {
    double m = minutes_ + static_cast<double>(i) * plant_.dt_minutes;
    size_t wi = weather_.index_at(m);
    size_t li = ite_.index_at(m);
    double watts = ite_.col0[li];
    Exogenous exo;
    exo.T_o = weather_.col0[wi];
    exo.W_o = weather_.col1[wi];
    exo.Q_o = 0.5 * watts * kWattToBtuPerMin;  // even split across zones
    exo.M_o = 0.0;
    ControlInput uw = local_loop(west_.T_3, action.TS_west, action.F_west);
    ControlInput ue = local_loop(east_.T_3, action.TS_east, action.F_east);
    west_ = step_single_zone(west_, uw, exo, plant_, plant_.dt_minutes);
    east_ = step_single_zone(east_, ue, exo, plant_, plant_.dt_minutes);
    sum_T_out += exo.T_o;
    sum_P_ite += watts;
    sum_P_hvac += hvac_power(uw, plant_) + hvac_power(ue, plant_);
    sum_T_west += west_.T_3;
    sum_T_east += east_.T_3;
  }
  double inv = 1.0 / static_cast<double>(n_sub);
  Observation o;
  o.T_out = sum_T_out * inv;
  o.T_west = sum_T_west * inv;
  o.T_east = sum_T_east * inv;
  o.P_ite = sum_P_ite * inv;
  o.P_hvac = sum_P_hvac * inv;

  minutes_ += cfg_.control_dt_minutes;
  ++step_count_;
  current_obs_ = o;
  last_action_ = action;

  RewardResult rr = reward(o, reward_);
  res.obs = o;
  res.reward = rr.r;
  res.violation_west = rr.violation_west;
  res.violation_east = rr.violation_east;
  res.done = false;
  return res;
}

std::string TwoZoneEnv::serialize_state() const {
  std::string out;
  for (double v : {west_.T_2, west_.T_3, west_.W_3, east_.T_2, east_.T_3, east_.W_3})
    put_f64(out, v);
  for (double v : current_obs_.vec()) put_f64(out, v);
  for (double v : last_action_.vec()) put_f64(out, v);
  put_i64(out, step_count_);
  put_f64(out, minutes_);
  return out;
}

void TwoZoneEnv::restore_state(const std::string& blob) {
  BinReader r(blob);
  west_.T_2 = r.f64();
  west_.T_3 = r.f64();
  west_.W_3 = r.f64();
  east_.T_2 = r.f64();
  east_.T_3 = r.f64();
  east_.W_3 = r.f64();
  Observation::Vec ov;
  for (int i = 0; i < kObsDim; ++i) ov[i] = r.f64();
  current_obs_ = Observation::from_vec(ov);
  Eigen::Vector4d av;
  for (int i = 0; i < kActDim; ++i) av[i] = r.f64();
  last_action_ = RawAction::from_vec(av);
  step_count_ = r.i64();
  minutes_ = r.f64();
  if (!r.done()) throw std::runtime_error("env state blob has trailing bytes");
}

}  // namespace hvacmbrl
