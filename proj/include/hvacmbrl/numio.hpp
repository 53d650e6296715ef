#pragma once
// Number/text/binary helpers shared by logs, traces, reports and checkpoints.
// All floating-point text output uses shortest round-trip formatting so that
// value -> text -> value is exact and re-emitting a parsed value reproduces
// the original bytes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace hvacmbrl {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Strict parse of a full token; throws std::runtime_error on garbage.
double parse_double(std::string_view token);
int64_t parse_int(std::string_view token);

// Splits one CSV line on ',' without quoting rules (our files never quote).
std::vector<std::string_view> split_csv(std::string_view line);

// Reads a whole file; throws with the path in the message when unreadable.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Splits text into lines, dropping a trailing empty line after a final LF.
std::vector<std::string_view> split_lines(std::string_view text);

// Raw little-endian binary primitives for checkpoint files.
void put_u64(std::string& out, uint64_t v);
void put_i64(std::string& out, int64_t v);
void put_f64(std::string& out, double v);
void put_bytes(std::string& out, std::string_view bytes);

class BinReader {
 public:
  explicit BinReader(std::string_view data) : data_(data) {}
  uint64_t u64();
  int64_t i64();
  double f64();
  std::string_view bytes(size_t n);
  bool done() const { return pos_ == data_.size(); }
  size_t remaining() const { return data_.size() - pos_; }

 private:
  std::string_view data_;
  size_t pos_ = 0;
};

}  // namespace hvacmbrl
