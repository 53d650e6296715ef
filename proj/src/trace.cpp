#include "hvacmbrl/trace.hpp"

#include <cmath>
#include <stdexcept>

#include "hvacmbrl/numio.hpp"

namespace hvacmbrl {

size_t Trace::index_at(double minute) const {
  if (minute < 0.0) throw std::runtime_error("trace time before start");
  // Small forward nudge so exact boundaries land in the interval they open.
  auto idx = static_cast<size_t>(std::floor(minute / dt_minutes + 1e-9));
  if (idx >= size()) throw std::runtime_error("trace exhausted");
  return idx;
}

Trace gen_weather(const WeatherGenParams& p, Rng rng) {
  Trace t;
  t.kind = TraceKind::weather;
  t.dt_minutes = p.dt_minutes;
  auto n = static_cast<size_t>(std::llround(p.days * 1440.0 / p.dt_minutes));
  t.col0.reserve(n);
  t.col1.reserve(n);
  const double two_pi = 2.0 * M_PI;
  double wander = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double minute = static_cast<double>(i) * p.dt_minutes;
    double day_phase = two_pi * (minute - p.t_peak_minute) / 1440.0;
    double drift_phase = two_pi * minute / (p.drift_period_days * 1440.0);
    // Bounded AR(1): zero-mean, slowly varying, capped by construction.
    wander = 0.995 * wander + 0.1 * rng.uniform(-p.noise_c, p.noise_c);
    double temp = p.t_mean_c + p.t_amp_c * std::cos(day_phase)
                + p.drift_amp_c * std::sin(drift_phase) + wander;
    if (temp < p.t_min_c) temp = p.t_min_c;
    // Humidity peaks in the early morning (phase-shifted from temperature).
    double w = p.w_mean - p.w_amp * std::cos(day_phase - 0.6 * M_PI);
    if (w < p.w_min) w = p.w_min;
    t.col0.push_back(temp);
    t.col1.push_back(w);
  }
  return t;
}

double ite_amplitude(double minute_of_day) {
  if (minute_of_day < 6.0 * 60.0) return 0.50;
  if (minute_of_day < 8.0 * 60.0) return 0.75;
  if (minute_of_day < 18.0 * 60.0) return 1.00;
  return 0.80;
}

Trace gen_ite_load(const IteGenParams& p, Rng rng) {
  if (p.day_count < 1) throw std::runtime_error("gen_ite_load: day_count must be >= 1");
  if (!(p.peak_watts > 0.0)) throw std::runtime_error("gen_ite_load: peak_watts must be > 0");
  Trace t;
  t.kind = TraceKind::ite_load;
  t.dt_minutes = p.dt_minutes;
  auto n = static_cast<size_t>(std::llround(static_cast<double>(p.day_count) * 1440.0 / p.dt_minutes));
  t.col0.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    double minute = static_cast<double>(i) * p.dt_minutes;
    double minute_of_day = std::fmod(minute, 1440.0);
    double eps = rng.uniform(-p.noise_half_width, p.noise_half_width);
    t.col0.push_back(p.peak_watts * ite_amplitude(minute_of_day) * (1.0 + eps));
  }
  return t;
}

Trace load_trace(const std::string& path, TraceKind kind) {
  std::string text = read_text_file(path);
  auto lines = split_lines(text);
  if (lines.empty()) throw std::runtime_error("trace validation error: empty file: " + path);
  size_t expect_cols = kind == TraceKind::weather ? 3 : 2;
  const char* expect_header = kind == TraceKind::weather ? "minute,T_o_C,W_o" : "minute,watts";
  if (lines[0] != expect_header)
    throw std::runtime_error("trace parse error (line 1): expected header '" +
                             std::string(expect_header) + "' in " + path);
  if (lines.size() < 2)
    throw std::runtime_error("trace validation error: no data rows in " + path);

  Trace t;
  t.kind = kind;
  double declared_dt = 0.0;
  size_t first_data_line = 1;
  // Optional declaration line directly after the header.
  if (lines.size() > 1 && lines[1].rfind("# dt_minutes=", 0) == 0) {
    declared_dt = parse_double(lines[1].substr(13));
    if (!(declared_dt > 0.0))
      throw std::runtime_error("trace validation error: declared dt must be > 0 in " + path);
    first_data_line = 2;
  }
  if (lines.size() <= first_data_line)
    throw std::runtime_error("trace validation error: no data rows in " + path);
  double prev_minute = -1.0;
  double first_minute = 0.0, second_minute = 0.0;
  for (size_t i = first_data_line; i < lines.size(); ++i) {
    auto fields = split_csv(lines[i]);
    if (fields.size() != expect_cols) {
      const char* missing = kind == TraceKind::weather
                                ? (fields.size() == 2 ? "W_o" : "T_o_C")
                                : "watts";
      throw std::runtime_error("trace parse error (line " + std::to_string(i + 1) +
                               "): expected " + std::to_string(expect_cols) +
                               " columns, missing '" + missing + "' in " + path);
    }
    double minute, v0, v1 = 0.0;
    try {
      minute = parse_double(fields[0]);
      v0 = parse_double(fields[1]);
      if (expect_cols == 3) v1 = parse_double(fields[2]);
    } catch (const std::exception& e) {
      throw std::runtime_error("trace parse error (line " + std::to_string(i + 1) + "): " +
                               e.what() + " in " + path);
    }
    if (minute <= prev_minute)
      throw std::runtime_error("trace validation error (line " + std::to_string(i + 1) +
                               "): non-monotone minute column in " + path);
    if (i == first_data_line) first_minute = minute;
    if (i == first_data_line + 1) second_minute = minute;
    prev_minute = minute;
    t.col0.push_back(v0);
    if (expect_cols == 3) t.col1.push_back(v1);
  }
  if (first_minute != 0.0)
    throw std::runtime_error("trace validation error: first row must start at minute 0 in " + path);
  double inferred_dt = t.size() >= 2 ? second_minute - first_minute : 0.0;
  if (declared_dt > 0.0) {
    if (inferred_dt > 0.0 && std::abs(inferred_dt - declared_dt) > 1e-9)
      throw std::runtime_error("trace validation error: declared dt disagrees with rows in " + path);
    t.dt_minutes = declared_dt;
  } else if (inferred_dt > 0.0) {
    t.dt_minutes = inferred_dt;
  } else {
    t.dt_minutes = 1.0;
  }
  return t;
}

void save_trace(const Trace& trace, const std::string& path) {
  std::string out;
  out.reserve(trace.size() * 24 + 32);
  out += trace.kind == TraceKind::weather ? "minute,T_o_C,W_o\n" : "minute,watts\n";
  out += "# dt_minutes=";
  out += format_double(trace.dt_minutes);
  out += '\n';
  for (size_t i = 0; i < trace.size(); ++i) {
    out += format_double(static_cast<double>(i) * trace.dt_minutes);
    out += ',';
    out += format_double(trace.col0[i]);
    if (trace.kind == TraceKind::weather) {
      out += ',';
      out += format_double(trace.col1[i]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

}  // namespace hvacmbrl
