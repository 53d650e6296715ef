#pragma once
// Time-indexed exogenous traces: weather (T_o degC, W_o) and IT-equipment
// load (watts). CSV on disk, minute-indexed in memory, synthesized
// deterministically from a seed when no file is supplied.

#include <cstdint>
#include <string>
#include <vector>

#include "hvacmbrl/rng.hpp"

namespace hvacmbrl {

enum class TraceKind { weather, ite_load };

struct Trace {
  TraceKind kind = TraceKind::weather;
  double dt_minutes = 1.0;
  // weather: columns (T_o_C, W_o); ite-load: column (watts). Row i is the
  // value holding over [i*dt, (i+1)*dt).
  std::vector<double> col0;
  std::vector<double> col1;  // unused for ite-load

  size_t size() const { return col0.size(); }
  double end_minute() const { return dt_minutes * static_cast<double>(size()); }

  // Value(s) holding at absolute minute t; throws past the end.
  size_t index_at(double minute) const;
};

// Weather synthesis: diurnal sinusoid plus a slow drift sinusoid plus a
// small bounded AR(1) wander, all seeded. Temperatures stay well away from
// zero so relative-error metrics are well defined.
struct WeatherGenParams {
  double days = 1.0;
  double dt_minutes = 1.0;
  double t_mean_c = 24.0;
  double t_amp_c = 5.0;         // diurnal half-swing
  double t_peak_minute = 960.0; // hottest time of day (16:00)
  double drift_amp_c = 1.0;     // slow multi-day component
  double drift_period_days = 3.41;
  double noise_c = 0.1;         // AR(1) wander scale
  double w_mean = 0.0095;       // outdoor humidity ratio
  double w_amp = 0.002;
  double w_min = 0.002;
  double t_min_c = 8.0;         // hard floor after noise
};

Trace gen_weather(const WeatherGenParams& p, Rng rng);

// ITE load: stepped daily amplitude schedule times peak watts times
// (1 + uniform noise in [-noise_half_width, +noise_half_width]).
// Schedule: 0.50 over 0:00-6:00, 0.75 over 6:00-8:00, 1.00 over 8:00-18:00,
// 0.80 over 18:00-24:00.
struct IteGenParams {
  int64_t day_count = 1;
  double peak_watts = 50000.0;
  double dt_minutes = 1.0;
  double noise_half_width = 0.05;
};

double ite_amplitude(double minute_of_day);
Trace gen_ite_load(const IteGenParams& p, Rng rng);

// CSV round trip. Weather header: minute,T_o_C,W_o ; load header: minute,watts.
// Malformed rows fail with the line number; a non-monotone minute column or an
// empty body fails validation.
Trace load_trace(const std::string& path, TraceKind kind);
void save_trace(const Trace& trace, const std::string& path);

}  // namespace hvacmbrl
