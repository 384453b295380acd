#include "spinctl/csvio.hpp"

#include <cstdio>
#include <stdexcept>

namespace spinctl::csv {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }

Writer::Writer(const std::string& path) : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path_);
}

Writer::~Writer() {
  if (out_.is_open()) out_.close();
}

void Writer::check() const {
  if (!out_) throw std::runtime_error("write failure: " + path_);
}

void Writer::metadata(const std::string& text) {
  out_ << "# " << text << '\n';
  check();
}

void Writer::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  check();
}

void Writer::close() {
  out_.close();
  if (out_.fail()) throw std::runtime_error("write failure: " + path_);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

File read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  File f;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t s = 1;
      if (s < line.size() && line[s] == ' ') ++s;
      f.metadata.push_back(line.substr(s));
      continue;
    }
    if (!have_header) {
      f.header = split(line, ',');
      have_header = true;
    } else {
      f.rows.push_back(split(line, ','));
    }
  }
  if (in.bad()) throw std::runtime_error("read failure: " + path);
  return f;
}

}  // namespace spinctl::csv
