#include "hvacmbrl/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

ExperimentConfig::ExperimentConfig() {
  weather.days = 0.0;  // sized to the run when built
  ite.day_count = 0;
}

namespace {

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(size_t line_no, const std::string& msg) {
  throw std::runtime_error("config line " + std::to_string(line_no) + ": " + msg);
}

double num(const std::string& v, size_t line_no, const std::string& key) {
  try {
    return parse_double(v);
  } catch (const std::exception&) {
    fail(line_no, "key '" + key + "': not a number: '" + v + "'");
  }
}

int64_t integer(const std::string& v, size_t line_no, const std::string& key) {
  try {
    return parse_int(v);
  } catch (const std::exception&) {
    fail(line_no, "key '" + key + "': not an integer: '" + v + "'");
  }
}

bool truth(const std::string& v, size_t line_no, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(line_no, "key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<int> int_list(const std::string& v, size_t line_no, const std::string& key) {
  std::vector<int> out;
  for (std::string_view part : split_csv(v)) {
    std::string p = trim(part);
    if (p.empty()) fail(line_no, "key '" + key + "': empty list element");
    out.push_back(int(integer(p, line_no, key)));
  }
  return out;
}

void apply_key(ExperimentConfig& c, const std::string& sec, const std::string& key,
               const std::string& v, size_t ln) {
  if (sec == "run") {
    if (key == "seed") {
      int64_t s = integer(v, ln, key);
      if (s < 0) fail(ln, "seed must be >= 0");
      c.seed = uint64_t(s);
    } else if (key == "out") {
      c.out_dir = v;
    } else if (key == "mode") {
      try {
        c.mode = parse_run_mode(v);
      } catch (const std::exception& e) {
        fail(ln, e.what());
      }
    } else if (key == "simulate_days") {
      c.simulate_days = int(integer(v, ln, key));
    } else {
      fail(ln, "unknown key '" + key + "' in [run]");
    }
  } else if (sec == "plant") {
    PlantParams& p = c.plant;
    if (key == "v_s") p.V_s = num(v, ln, key);
    else if (key == "v_he") p.V_he = num(v, ln, key);
    else if (key == "c_p") p.C_p = num(v, ln, key);
    else if (key == "rho") p.rho = num(v, ln, key);
    else if (key == "h_fg") p.h_fg = num(v, ln, key);
    else if (key == "h_w") p.h_w = num(v, ln, key);
    else if (key == "w_s") p.W_s = num(v, ln, key);
    else if (key == "mix_fresh") p.mix_fresh = num(v, ln, key);
    else if (key == "k_fan") p.k_fan = num(v, ln, key);
    else if (key == "k_chill") p.k_chill = num(v, ln, key);
    else if (key == "cfm_base") p.cfm_base = num(v, ln, key);
    else if (key == "cfm_per_unit") p.cfm_per_unit = num(v, ln, key);
    else if (key == "gpm_kp") p.gpm_kp = num(v, ln, key);
    else if (key == "gpm_max") p.gpm_max = num(v, ln, key);
    else if (key == "dt_minutes") p.dt_minutes = num(v, ln, key);
    else if (key == "integrator") {
      if (v == "euler") p.integrator = PlantParams::Integrator::euler;
      else if (v == "rk4") p.integrator = PlantParams::Integrator::rk4;
      else fail(ln, "integrator must be euler or rk4");
    } else fail(ln, "unknown key '" + key + "' in [plant]");
  } else if (sec == "env") {
    if (key == "control_dt_minutes") c.env.control_dt_minutes = num(v, ln, key);
    else if (key == "init_t2") c.env.init_west.T_2 = c.env.init_east.T_2 = num(v, ln, key);
    else if (key == "init_t3") c.env.init_west.T_3 = c.env.init_east.T_3 = num(v, ln, key);
    else if (key == "init_w3") c.env.init_west.W_3 = c.env.init_east.W_3 = num(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [env]");
  } else if (sec == "weather") {
    WeatherGenParams& w = c.weather;
    if (key == "path") c.weather_path = v;
    else if (key == "days") w.days = num(v, ln, key);
    else if (key == "dt_minutes") w.dt_minutes = num(v, ln, key);
    else if (key == "t_mean_c") w.t_mean_c = num(v, ln, key);
    else if (key == "t_amp_c") w.t_amp_c = num(v, ln, key);
    else if (key == "t_peak_minute") w.t_peak_minute = num(v, ln, key);
    else if (key == "drift_amp_c") w.drift_amp_c = num(v, ln, key);
    else if (key == "drift_period_days") w.drift_period_days = num(v, ln, key);
    else if (key == "noise_c") w.noise_c = num(v, ln, key);
    else if (key == "w_mean") w.w_mean = num(v, ln, key);
    else if (key == "w_amp") w.w_amp = num(v, ln, key);
    else if (key == "w_min") w.w_min = num(v, ln, key);
    else if (key == "t_min_c") w.t_min_c = num(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [weather]");
  } else if (sec == "load") {
    IteGenParams& l = c.ite;
    if (key == "path") c.load_path = v;
    else if (key == "days") l.day_count = integer(v, ln, key);
    else if (key == "peak_watts") l.peak_watts = num(v, ln, key);
    else if (key == "dt_minutes") l.dt_minutes = num(v, ln, key);
    else if (key == "noise_half_width") l.noise_half_width = num(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [load]");
  } else if (sec == "model") {
    ModelConfig& m = c.model;
    if (key == "window") m.window = int(integer(v, ln, key));
    else if (key == "arch") {
      if (v == "recurrent") m.arch = Arch::recurrent;
      else if (v == "feedforward") m.arch = Arch::feedforward;
      else fail(ln, "arch must be recurrent or feedforward");
    } else if (key == "attention") m.attention = truth(v, ln, key);
    else if (key == "hidden_size") m.hidden_size = int(integer(v, ln, key));
    else if (key == "learning_rate") m.learning_rate = num(v, ln, key);
    else if (key == "batch_size") m.batch_size = int(integer(v, ln, key));
    else if (key == "epochs") m.epochs = int(integer(v, ln, key));
    else if (key == "train_ratio") m.train_ratio = num(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [model]");
  } else if (sec == "plan") {
    if (key == "horizon") c.plan.horizon = int(integer(v, ln, key));
    else if (key == "samples") c.plan.samples = int(integer(v, ln, key));
    else if (key == "batched_rollout") c.plan.batched_rollout = truth(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [plan]");
  } else if (sec == "reward") {
    RewardParams& r = c.reward;
    if (key == "lambda1") r.lambda1 = num(v, ln, key);
    else if (key == "lambda2") r.lambda2 = num(v, ln, key);
    else if (key == "lambda_p") r.lambda_p = num(v, ln, key);
    else if (key == "t_target") r.t_target = num(v, ln, key);
    else if (key == "t_min") r.t_min = num(v, ln, key);
    else if (key == "t_max") r.t_max = num(v, ln, key);
    else if (key == "gamma") r.gamma = num(v, ln, key);
    else if (key == "center_bonus") r.center_bonus = truth(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [reward]");
  } else if (sec == "space") {
    SafeActionSpace& s = c.space;
    if (key == "ts_min") s.a_min[0] = s.a_min[1] = num(v, ln, key);
    else if (key == "ts_max") s.a_max[0] = s.a_max[1] = num(v, ln, key);
    else if (key == "f_min") s.a_min[2] = s.a_min[3] = num(v, ln, key);
    else if (key == "f_max") s.a_max[2] = s.a_max[3] = num(v, ln, key);
    else if (key == "delta_ts") s.delta[0] = s.delta[1] = num(v, ln, key);
    else if (key == "delta_f") s.delta[2] = s.delta[3] = num(v, ln, key);
    else fail(ln, "unknown key '" + key + "' in [space]");
  } else if (sec == "loop") {
    LoopConfig& l = c.loop;
    if (key == "initial_collect_steps") l.initial_collect_steps = int(integer(v, ln, key));
    else if (key == "on_policy_steps") l.on_policy_steps = int(integer(v, ln, key));
    else if (key == "epochs") l.epochs = int(integer(v, ln, key));
    else if (key == "total_rounds") l.total_rounds = int(integer(v, ln, key));
    else if (key == "max_control_steps") l.max_control_steps = int(integer(v, ln, key));
    else if (key == "explore_half_range") l.explore_half_range = num(v, ln, key);
    else if (key == "buffer_capacity") {
      int64_t cap = integer(v, ln, key);
      if (cap < 1) fail(ln, "buffer_capacity must be >= 1");
      l.buffer_capacity = size_t(cap);
    } else fail(ln, "unknown key '" + key + "' in [loop]");
  } else if (sec == "eval") {
    EvalDynOptions& e = c.eval;
    if (key == "windows") e.windows = int_list(v, ln, key);
    else if (key == "horizon") e.horizon = int(integer(v, ln, key));
    else if (key == "traces") e.traces = int(integer(v, ln, key));
    else if (key == "eval_days") e.eval_days = int(integer(v, ln, key));
    else if (key == "starts") e.starts = int(integer(v, ln, key));
    else fail(ln, "unknown key '" + key + "' in [eval]");
  } else {
    fail(ln, "unknown section [" + sec + "]");
  }
}

const char* const kSections[] = {"run",  "plant",  "env",   "weather", "load", "model",
                                 "plan", "reward", "space", "loop",    "eval"};

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string_view> lines = split_lines(text);
  std::string section;
  std::set<std::string> seen;
  for (size_t i = 0; i < lines.size(); ++i) {
    size_t ln = i + 1;
    std::string s = trim(lines[i]);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']') fail(ln, "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (std::find_if(std::begin(kSections), std::end(kSections),
                       [&](const char* k) { return section == k; }) ==
          std::end(kSections))
        fail(ln, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos) fail(ln, "expected key = value");
    std::string key = trim(std::string_view(s).substr(0, eq));
    std::string value = trim(std::string_view(s).substr(eq + 1));
    if (key.empty()) fail(ln, "empty key");
    if (section.empty()) fail(ln, "key '" + key + "' outside any [section]");
    std::string full = section + "." + key;
    if (!seen.insert(full).second) fail(ln, "duplicate key '" + key + "' in [" + section + "]");
    apply_key(cfg, section, key, value, ln);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_text_file(path));
}

namespace {

void kv(std::string& out, const char* key, const std::string& v) {
  out += key;
  out += " = ";
  out += v;
  out += '\n';
}
void kv(std::string& out, const char* key, double v) { kv(out, key, format_double(v)); }
void kv(std::string& out, const char* key, int64_t v) { kv(out, key, std::to_string(v)); }
void kv(std::string& out, const char* key, int v) { kv(out, key, std::to_string(v)); }
void kv(std::string& out, const char* key, bool v) {
  kv(out, key, std::string(v ? "true" : "false"));
}

}  // namespace

std::string dump_config(const ExperimentConfig& c) {
  std::string o;
  o += "[run]\n";
  kv(o, "seed", int64_t(c.seed));
  kv(o, "out", c.out_dir);
  kv(o, "mode", to_string(c.mode));
  kv(o, "simulate_days", c.simulate_days);
  o += "\n[plant]\n";
  kv(o, "v_s", c.plant.V_s);
  kv(o, "v_he", c.plant.V_he);
  kv(o, "c_p", c.plant.C_p);
  kv(o, "rho", c.plant.rho);
  kv(o, "h_fg", c.plant.h_fg);
  kv(o, "h_w", c.plant.h_w);
  kv(o, "w_s", c.plant.W_s);
  kv(o, "mix_fresh", c.plant.mix_fresh);
  kv(o, "k_fan", c.plant.k_fan);
  kv(o, "k_chill", c.plant.k_chill);
  kv(o, "cfm_base", c.plant.cfm_base);
  kv(o, "cfm_per_unit", c.plant.cfm_per_unit);
  kv(o, "gpm_kp", c.plant.gpm_kp);
  kv(o, "gpm_max", c.plant.gpm_max);
  kv(o, "dt_minutes", c.plant.dt_minutes);
  kv(o, "integrator",
     std::string(c.plant.integrator == PlantParams::Integrator::euler ? "euler" : "rk4"));
  o += "\n[env]\n";
  kv(o, "control_dt_minutes", c.env.control_dt_minutes);
  kv(o, "init_t2", c.env.init_west.T_2);
  kv(o, "init_t3", c.env.init_west.T_3);
  kv(o, "init_w3", c.env.init_west.W_3);
  o += "\n[weather]\n";
  kv(o, "path", c.weather_path);
  kv(o, "days", c.weather.days);
  kv(o, "dt_minutes", c.weather.dt_minutes);
  kv(o, "t_mean_c", c.weather.t_mean_c);
  kv(o, "t_amp_c", c.weather.t_amp_c);
  kv(o, "t_peak_minute", c.weather.t_peak_minute);
  kv(o, "drift_amp_c", c.weather.drift_amp_c);
  kv(o, "drift_period_days", c.weather.drift_period_days);
  kv(o, "noise_c", c.weather.noise_c);
  kv(o, "w_mean", c.weather.w_mean);
  kv(o, "w_amp", c.weather.w_amp);
  kv(o, "w_min", c.weather.w_min);
  kv(o, "t_min_c", c.weather.t_min_c);
  o += "\n[load]\n";
  kv(o, "path", c.load_path);
  kv(o, "days", c.ite.day_count);
  kv(o, "peak_watts", c.ite.peak_watts);
  kv(o, "dt_minutes", c.ite.dt_minutes);
  kv(o, "noise_half_width", c.ite.noise_half_width);
  o += "\n[model]\n";
  kv(o, "window", c.model.window);
  kv(o, "arch",
     std::string(c.model.arch == Arch::recurrent ? "recurrent" : "feedforward"));
  kv(o, "attention", c.model.attention);
  kv(o, "hidden_size", c.model.hidden_size);
  kv(o, "learning_rate", c.model.learning_rate);
  kv(o, "batch_size", c.model.batch_size);
  kv(o, "epochs", c.model.epochs);
  kv(o, "train_ratio", c.model.train_ratio);
  o += "\n[plan]\n";
  kv(o, "horizon", c.plan.horizon);
  kv(o, "samples", c.plan.samples);
  kv(o, "batched_rollout", c.plan.batched_rollout);
  o += "\n[reward]\n";
  kv(o, "lambda1", c.reward.lambda1);
  kv(o, "lambda2", c.reward.lambda2);
  kv(o, "lambda_p", c.reward.lambda_p);
  kv(o, "t_target", c.reward.t_target);
  kv(o, "t_min", c.reward.t_min);
  kv(o, "t_max", c.reward.t_max);
  kv(o, "gamma", c.reward.gamma);
  kv(o, "center_bonus", c.reward.center_bonus);
  o += "\n[space]\n";
  kv(o, "ts_min", c.space.a_min[0]);
  kv(o, "ts_max", c.space.a_max[0]);
  kv(o, "f_min", c.space.a_min[2]);
  kv(o, "f_max", c.space.a_max[2]);
  kv(o, "delta_ts", c.space.delta[0]);
  kv(o, "delta_f", c.space.delta[2]);
  o += "\n[loop]\n";
  kv(o, "initial_collect_steps", c.loop.initial_collect_steps);
  kv(o, "on_policy_steps", c.loop.on_policy_steps);
  kv(o, "epochs", c.loop.epochs);
  kv(o, "total_rounds", c.loop.total_rounds);
  kv(o, "max_control_steps", c.loop.max_control_steps);
  kv(o, "explore_half_range", c.loop.explore_half_range);
  kv(o, "buffer_capacity", int64_t(c.loop.buffer_capacity));
  o += "\n[eval]\n";
  std::string ws;
  for (size_t i = 0; i < c.eval.windows.size(); ++i) {
    if (i) ws += ',';
    ws += std::to_string(c.eval.windows[i]);
  }
  kv(o, "windows", ws);
  kv(o, "horizon", c.eval.horizon);
  kv(o, "traces", c.eval.traces);
  kv(o, "eval_days", c.eval.eval_days);
  kv(o, "starts", c.eval.starts);
  return o;
}

uint64_t config_fingerprint(const ExperimentConfig& cfg) {
  std::string dump = dump_config(cfg);
  uint64_t h = 14695981039346656037ull;
  for (unsigned char b : dump) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

void ExperimentConfig::validate() const {
  plant.validate();
  model.validate();
  plan.validate();
  loop.validate();
  space.validate();
  if (out_dir.empty()) throw std::runtime_error("config: [run] out must be non-empty");
  if (simulate_days < 1)
    throw std::runtime_error("config: [run] simulate_days must be >= 1");
  if (!(env.control_dt_minutes > 0.0))
    throw std::runtime_error("config: [env] control_dt_minutes must be positive");
  if (reward.lambda1 < 0 || reward.lambda2 < 0 || reward.lambda_p < 0)
    throw std::runtime_error("config: [reward] weights must be >= 0");
  if (!(reward.t_min < reward.t_target && reward.t_target < reward.t_max))
    throw std::runtime_error("config: [reward] requires t_min < t_target < t_max");
  if (!(reward.gamma >= 0.0 && reward.gamma <= 1.0))
    throw std::runtime_error("config: [reward] gamma must be in [0, 1]");
  if (weather.days < 0) throw std::runtime_error("config: [weather] days must be >= 0");
  if (ite.day_count < 0) throw std::runtime_error("config: [load] days must be >= 0");
  if (eval.windows.empty())
    throw std::runtime_error("config: [eval] windows must be non-empty");
  for (int w : eval.windows)
    if (w < 1) throw std::runtime_error("config: [eval] window lengths must be >= 1");
  if (eval.horizon < 1 || eval.traces < 1 || eval.eval_days < 1 || eval.starts < 1)
    throw std::runtime_error("config: [eval] fields must be >= 1");
}

int64_t control_step_budget(const LoopConfig& loop) {
  int64_t budget = int64_t(loop.total_rounds) * loop.on_policy_steps;
  if (loop.max_control_steps > 0)
    budget = std::min<int64_t>(budget, loop.max_control_steps);
  return budget;
}

Trace build_weather_trace(const ExperimentConfig& cfg, double required_days) {
  if (!cfg.weather_path.empty()) return load_trace(cfg.weather_path, TraceKind::weather);
  WeatherGenParams p = cfg.weather;
  if (p.days <= 0.0) p.days = required_days + 1.0;
  return gen_weather(p, named_stream(cfg.seed, RngStream::weather));
}

Trace build_ite_trace(const ExperimentConfig& cfg, double required_days) {
  if (!cfg.load_path.empty()) return load_trace(cfg.load_path, TraceKind::ite_load);
  IteGenParams p = cfg.ite;
  if (p.day_count <= 0)
    p.day_count = int64_t(std::ceil(required_days)) + 1;
  return gen_ite_load(p, named_stream(cfg.seed, RngStream::ite_load));
}

RunInputs build_run_inputs(const ExperimentConfig& cfg) {
  cfg.validate();
  RunInputs in;
  in.plant = cfg.plant;
  in.reward = cfg.reward;
  in.env = cfg.env;
  in.space = cfg.space;
  in.model = cfg.model;
  in.plan = cfg.plan;
  in.loop = cfg.loop;
  in.mode = cfg.mode;
  in.seed = cfg.seed;
  in.config_fingerprint = config_fingerprint(cfg);
  int64_t steps = cfg.loop.initial_collect_steps + control_step_budget(cfg.loop);
  double days = double(steps) * cfg.env.control_dt_minutes / 1440.0;
  in.weather = build_weather_trace(cfg, days);
  in.ite = build_ite_trace(cfg, days);
  return in;
}

}  // namespace hvacmbrl
