#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <string>

#include "hvacmbrl/numio.hpp"

using namespace hvacmbrl;

TEST_SUITE("numio") {

TEST_CASE("format_double round-trips exactly") {
  const double cases[] = {0.0,    1.0,     -1.0,       0.1,         23.5,
                          1e-9,   -1e300,  1.0 / 3.0,  6240.0,      0.25,
                          1e-323, 5e-7,    3.1415926535897932, -0.0};
  for (double v : cases) {
    std::string s = format_double(v);
    double back = parse_double(s);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
}

TEST_CASE("format_double uses shortest form for simple values") {
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(format_double(23.5) == "23.5");
}

TEST_CASE("parse_double accepts plain and scientific tokens") {
  CHECK(parse_double("42") == 42.0);
  CHECK(parse_double("-0.5") == -0.5);
  CHECK(parse_double("1e3") == 1000.0);
  CHECK(parse_double("nan") != parse_double("nan"));  // NaN parses, compares unequal
}

TEST_CASE("parse_double rejects garbage and partial tokens") {
  CHECK_THROWS_WITH_AS(parse_double("abc"), doctest::Contains("abc"), std::runtime_error);
  CHECK_THROWS_AS(parse_double("1.5x"), std::runtime_error);
  CHECK_THROWS_AS(parse_double(""), std::runtime_error);
  CHECK_THROWS_AS(parse_double(" 1"), std::runtime_error);
}

TEST_CASE("parse_int strictness") {
  CHECK(parse_int("-17") == -17);
  CHECK(parse_int("0") == 0);
  CHECK_THROWS_AS(parse_int("3.5"), std::runtime_error);
  CHECK_THROWS_AS(parse_int(""), std::runtime_error);
  CHECK_THROWS_AS(parse_int("12abc"), std::runtime_error);
}

TEST_CASE("split_csv keeps empty fields and count") {
  auto f = split_csv("a,b,,d");
  REQUIRE(f.size() == 4);
  CHECK(f[0] == "a");
  CHECK(f[2] == "");
  CHECK(f[3] == "d");
  CHECK(split_csv("").size() == 1);
  CHECK(split_csv("x").size() == 1);
  CHECK(split_csv(",").size() == 2);
}

TEST_CASE("split_lines drops only the trailing empty line") {
  auto l1 = split_lines("a\nb\n");
  REQUIRE(l1.size() == 2);
  CHECK(l1[0] == "a");
  CHECK(l1[1] == "b");
  auto l2 = split_lines("a\n\nb");
  REQUIRE(l2.size() == 3);
  CHECK(l2[1] == "");
  CHECK(split_lines("").empty());
  CHECK(split_lines("\n").size() == 1);
}

TEST_CASE("text file round trip is byte exact") {
  namespace fs = std::filesystem;
  fs::path p = fs::temp_directory_path() / "hvac_numio_rt.txt";
  std::string payload = "line1\nline2\n\x01\x02 binary-ish \xff\n";
  write_text_file(p.string(), payload);
  CHECK(read_text_file(p.string()) == payload);
  fs::remove(p);
  CHECK_THROWS_WITH_AS(read_text_file(p.string()), doctest::Contains("hvac_numio_rt.txt"),
                       std::runtime_error);
}

TEST_CASE("binary primitives round trip") {
  std::string buf;
  put_u64(buf, 0);
  put_u64(buf, UINT64_C(0xfedcba9876543210));
  put_i64(buf, -42);
  put_f64(buf, 0.1);
  put_bytes(buf, "payload");
  BinReader r(buf);
  CHECK(r.u64() == 0);
  CHECK(r.u64() == UINT64_C(0xfedcba9876543210));
  CHECK(r.i64() == -42);
  CHECK(r.f64() == 0.1);
  CHECK(r.u64() == 7);  // put_bytes writes a length prefix
  CHECK(r.bytes(7) == "payload");
  CHECK(r.done());
  CHECK(r.remaining() == 0);
}

TEST_CASE("BinReader reports truncation") {
  std::string buf;
  put_u64(buf, 5);
  buf.resize(4);
  BinReader r(buf);
  CHECK_THROWS_WITH_AS(r.u64(), doctest::Contains("truncated"), std::runtime_error);
  BinReader r2("abc");
  CHECK_THROWS_AS(r2.bytes(4), std::runtime_error);
}

TEST_CASE("negative zero formats distinctly and round-trips") {
  double nz = -0.0;
  std::string s = format_double(nz);
  double back = parse_double(s);
  CHECK(std::signbit(back));
}

}  // TEST_SUITE
