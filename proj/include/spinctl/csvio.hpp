#pragma once

// CSV emission and parsing with a comment-metadata convention: lines
// beginning with '#' carry metadata (settings, timestamps, wall times);
// all remaining lines are the data section. Doubles are printed with 17
// significant digits so values round-trip exactly and a rerun with the
// same seed reproduces the data section byte for byte.

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace spinctl::csv {

std::string fmt(double v);
std::string fmt(long long v);
std::string fmt(std::uint64_t v);
std::string fmt(int v);

class Writer {
 public:
  // Throws std::runtime_error naming the path when the file cannot be
  // opened or written.
  explicit Writer(const std::string& path);
  ~Writer();

  void metadata(const std::string& text);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  void check() const;
  std::string path_;
  std::ofstream out_;
};

struct File {
  std::vector<std::string> metadata;  // '#' lines with the marker stripped
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Throws std::runtime_error naming the path on open or format failure.
File read(const std::string& path);

std::vector<std::string> split(const std::string& line, char sep);

}  // namespace spinctl::csv
