// Standalone trace synthesizer: writes the weather and IT-load CSV files the
// toolkit consumes, using the same seeded generators the run commands use.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hvacmbrl/rng.hpp"
#include "hvacmbrl/trace.hpp"

using namespace hvacmbrl;

int main(int argc, char** argv) {
  CLI::App app{"Synthesize weather / IT-equipment load traces"};
  app.require_subcommand(1);

  uint64_t seed = 1;
  std::string out;

  CLI::App* weather = app.add_subcommand("weather", "diurnal outdoor conditions CSV");
  WeatherGenParams wp;
  weather->add_option("--seed", seed, "RNG seed");
  weather->add_option("--out", out, "output CSV path")->required();
  weather->add_option("--days", wp.days, "trace length in days");
  weather->add_option("--dt", wp.dt_minutes, "row spacing in minutes");
  weather->add_option("--mean", wp.t_mean_c, "mean temperature, degC");
  weather->add_option("--amp", wp.t_amp_c, "diurnal half-swing, degC");
  weather->add_option("--peak-minute", wp.t_peak_minute, "hottest minute of day");
  weather->add_option("--drift-amp", wp.drift_amp_c, "slow drift amplitude, degC");
  weather->add_option("--drift-period", wp.drift_period_days, "drift period, days");
  weather->add_option("--noise", wp.noise_c, "AR(1) wander scale, degC");
  weather->add_option("--w-mean", wp.w_mean, "mean humidity ratio");
  weather->add_option("--w-amp", wp.w_amp, "humidity swing");
  weather->add_option("--w-min", wp.w_min, "humidity floor");
  weather->add_option("--t-min", wp.t_min_c, "temperature floor, degC");

  CLI::App* load = app.add_subcommand("load", "stepped daily IT power CSV");
  IteGenParams ip;
  load->add_option("--seed", seed, "RNG seed");
  load->add_option("--out", out, "output CSV path")->required();
  load->add_option("--days", ip.day_count, "trace length in days");
  load->add_option("--dt", ip.dt_minutes, "row spacing in minutes");
  load->add_option("--peak", ip.peak_watts, "peak IT power, watts");
  load->add_option("--noise", ip.noise_half_width, "multiplicative noise half-width");

  CLI11_PARSE(app, argc, argv);

  try {
    Trace t = weather->parsed() ? gen_weather(wp, Rng(seed)) : gen_ite_load(ip, Rng(seed));
    save_trace(t, out);
    std::cout << "wrote " << out << " (" << t.size() << " rows, dt " << t.dt_minutes
              << " min)\n";
  } catch (const std::exception& e) {
    std::cerr << "hvacgen: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
