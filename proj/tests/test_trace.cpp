#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "hvacmbrl/numio.hpp"
#include "hvacmbrl/trace.hpp"

using namespace hvacmbrl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("hvac_trace_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  static int& counter() { static int c = 0; return c; }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& p, const std::string& text) { write_text_file(p, text); }

}  // namespace

TEST_SUITE("trace") {

TEST_CASE("load schedule amplitude follows the four daily blocks") {
  CHECK(ite_amplitude(0.0) == 0.50);
  CHECK(ite_amplitude(100.0) == 0.50);
  CHECK(ite_amplitude(359.0) == 0.50);
  CHECK(ite_amplitude(360.0) == 0.75);
  CHECK(ite_amplitude(479.0) == 0.75);
  CHECK(ite_amplitude(480.0) == 1.00);
  CHECK(ite_amplitude(1079.0) == 1.00);
  CHECK(ite_amplitude(1080.0) == 0.80);
  CHECK(ite_amplitude(1439.0) == 0.80);
}

TEST_CASE("generated weather has the right length, floor and bounded swing") {
  WeatherGenParams p;
  p.days = 3.0;
  Trace t = gen_weather(p, Rng(42));
  REQUIRE(t.size() == 3 * 1440);
  CHECK(t.kind == TraceKind::weather);
  CHECK(t.dt_minutes == 1.0);
  double slack = p.t_amp_c + p.drift_amp_c + 20.0 * p.noise_c;
  for (size_t i = 0; i < t.size(); ++i) {
    CHECK(t.col0[i] >= p.t_min_c);
    CHECK(t.col0[i] <= p.t_mean_c + slack);
    CHECK(t.col0[i] >= p.t_mean_c - slack);
    CHECK(t.col1[i] >= p.w_min);
  }
}

TEST_CASE("generated weather is seed deterministic and seed sensitive") {
  WeatherGenParams p;
  Trace a = gen_weather(p, Rng(1)), b = gen_weather(p, Rng(1)), c = gen_weather(p, Rng(2));
  REQUIRE(a.size() == b.size());
  CHECK(a.col0 == b.col0);
  CHECK(a.col1 == b.col1);
  CHECK(a.col0 != c.col0);
}

TEST_CASE("generated load respects the schedule envelope and noise band") {
  IteGenParams p;
  p.day_count = 2;
  p.dt_minutes = 15.0;
  Trace t = gen_ite_load(p, Rng(7));
  REQUIRE(t.size() == 2 * 96);
  for (size_t i = 0; i < t.size(); ++i) {
    double minute = static_cast<double>(i) * 15.0;
    double amp = ite_amplitude(std::fmod(minute, 1440.0));
    CHECK(t.col0[i] >= p.peak_watts * amp * (1.0 - p.noise_half_width) - 1e-9);
    CHECK(t.col0[i] <= p.peak_watts * amp * (1.0 + p.noise_half_width) + 1e-9);
  }
  CHECK_THROWS_AS(gen_ite_load(IteGenParams{.day_count = 0}, Rng(1)), std::runtime_error);
}

TEST_CASE("index_at maps minutes onto rows half-open") {
  Trace t;
  t.kind = TraceKind::ite_load;
  t.dt_minutes = 15.0;
  t.col0 = {1.0, 2.0, 3.0};
  CHECK(t.index_at(0.0) == 0);
  CHECK(t.index_at(14.999) == 0);
  CHECK(t.index_at(15.0) == 1);
  CHECK(t.index_at(44.9) == 2);
  CHECK(t.end_minute() == 45.0);
  CHECK_THROWS_AS(t.index_at(45.0), std::runtime_error);
  CHECK_THROWS_AS(t.index_at(-1.0), std::runtime_error);
}

TEST_CASE("save then load reproduces values and a second save is byte identical") {
  TempDir d;
  IteGenParams p;
  p.dt_minutes = 15.0;
  Trace t = gen_ite_load(p, Rng(3));
  std::string f1 = d.file("load.csv");
  save_trace(t, f1);
  Trace back = load_trace(f1, TraceKind::ite_load);
  REQUIRE(back.size() == t.size());
  CHECK(back.dt_minutes == t.dt_minutes);
  for (size_t i = 0; i < t.size(); ++i) CHECK(back.col0[i] == t.col0[i]);
  std::string f2 = d.file("resaved.csv");
  save_trace(back, f2);
  CHECK(read_text_file(f1) == read_text_file(f2));
}

TEST_CASE("weather file round trip keeps both columns exactly") {
  TempDir d;
  WeatherGenParams p;
  p.days = 0.25;
  Trace t = gen_weather(p, Rng(9));
  std::string f = d.file("weather.csv");
  save_trace(t, f);
  Trace back = load_trace(f, TraceKind::weather);
  REQUIRE(back.size() == t.size());
  CHECK(back.col0 == t.col0);
  CHECK(back.col1 == t.col1);
}

TEST_CASE("loader rejects a wrong header naming line 1") {
  TempDir d;
  std::string f = d.file("bad.csv");
  write(f, "minute,watts_wrong\n0,1\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("line 1"), std::runtime_error);
  write(f, "minute,watts\n0,1\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::weather),
                       doctest::Contains("minute,T_o_C,W_o"), std::runtime_error);
}

TEST_CASE("loader names the line and missing column of a short row") {
  TempDir d;
  std::string f = d.file("bad.csv");
  write(f, "minute,T_o_C,W_o\n0,20.0,0.009\n1,21.0\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::weather),
                       doctest::Contains("line 3"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::weather),
                       doctest::Contains("W_o"), std::runtime_error);
}

TEST_CASE("loader names the line of an unparsable number") {
  TempDir d;
  std::string f = d.file("bad.csv");
  write(f, "minute,watts\n0,100\n1,oops\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("line 3"), std::runtime_error);
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("oops"), std::runtime_error);
}

TEST_CASE("loader rejects non-monotone minutes, a late start and empty bodies") {
  TempDir d;
  std::string f = d.file("bad.csv");
  write(f, "minute,watts\n0,1\n2,2\n1,3\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("non-monotone"), std::runtime_error);
  write(f, "minute,watts\n5,1\n6,2\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("minute 0"), std::runtime_error);
  write(f, "minute,watts\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("no data rows"), std::runtime_error);
  write(f, "");
  CHECK_THROWS_AS(load_trace(f, TraceKind::ite_load), std::runtime_error);
}

TEST_CASE("missing file error carries the path") {
  CHECK_THROWS_WITH_AS(load_trace("/definitely/not/here.csv", TraceKind::weather),
                       doctest::Contains("/definitely/not/here.csv"), std::runtime_error);
}

TEST_CASE("a single-row trace takes its step from the declaration line") {
  TempDir d;
  std::string f = d.file("one.csv");
  write(f, "minute,watts\n# dt_minutes=30\n0,5000\n");
  Trace t = load_trace(f, TraceKind::ite_load);
  REQUIRE(t.size() == 1);
  CHECK(t.dt_minutes == 30.0);
  CHECK(t.end_minute() == 30.0);
  CHECK(t.index_at(29.0) == 0);
}

TEST_CASE("a declared dt must agree with the row spacing") {
  TempDir d;
  std::string f = d.file("two.csv");
  write(f, "minute,watts\n# dt_minutes=30\n0,5000\n15,5100\n");
  CHECK_THROWS_WITH_AS(load_trace(f, TraceKind::ite_load),
                       doctest::Contains("disagrees"), std::runtime_error);
  write(f, "minute,watts\n# dt_minutes=15\n0,5000\n15,5100\n");
  Trace t = load_trace(f, TraceKind::ite_load);
  CHECK(t.dt_minutes == 15.0);
}

}  // TEST_SUITE
