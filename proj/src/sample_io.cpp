#include "hauslev/sample_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "hauslev/error.hpp"
#include "hauslev/format.hpp"

namespace hauslev {

void write_samples(std::ostream& out, const SampleSet& s) {
  out << "# d=" << s.d << " n=" << s.n() << " seed=" << s.seed << '\n';
  std::string row;
  for (std::size_t i = 0; i < s.n(); ++i) {
    row.clear();
    for (int k = 0; k < s.d; ++k) {
      if (k) row += ',';
      row += fmt17(s.points[i * s.d + k]);
    }
    row += '\n';
    out << row;
  }
}

void write_samples(const std::filesystem::path& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  write_samples(out, s);
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

namespace {

template <typename T>
bool parse_field(const std::string& header, const std::string& key, T& value) {
  const auto pos = header.find(key + "=");
  if (pos == std::string::npos) return false;
  const char* first = header.data() + pos + key.size() + 1;
  const char* last = header.data() + header.size();
  return std::from_chars(first, last, value).ec == std::errc{};
}

}  // namespace

SampleSet read_samples(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) {
    throw ParseError("sample file: missing '# d=.. n=.. seed=..' header", 1);
  }
  SampleSet s;
  std::size_t n = 0;
  if (!parse_field(line, "d", s.d) || !parse_field(line, "n", n) || !parse_field(line, "seed", s.seed)) {
    throw ParseError("sample file: malformed header", 1);
  }
  if (s.d < 1 || s.d > kMaxDim) throw ParseError("sample file: unsupported dimension", 1);
  s.points.reserve(n * s.d);
  std::size_t lineno = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = p + line.size();
    for (int k = 0; k < s.d; ++k) {
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc{}) throw ParseError("sample file: bad number", lineno);
      if (!(v >= 0.0 && v <= 1.0)) throw ParseError("sample file: coordinate outside [0,1]", lineno);
      s.points.push_back(v);
      p = res.ptr;
      if (k + 1 < s.d) {
        if (p == end || *p != ',') throw ParseError("sample file: expected " + std::to_string(s.d) + " columns", lineno);
        ++p;
      }
    }
    if (p != end) throw ParseError("sample file: expected " + std::to_string(s.d) + " columns", lineno);
    ++rows;
  }
  if (rows != n) {
    throw ParseError("sample file: header says n=" + std::to_string(n) + " but found " + std::to_string(rows) + " rows",
                     lineno);
  }
  return s;
}

SampleSet read_samples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read " + path.string());
  return read_samples(in);
}

}  // namespace hauslev
