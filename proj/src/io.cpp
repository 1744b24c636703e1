#include "stm/io.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace stm {

std::string fmt_double(double x) {
  char buf[64];
  // %.17g always round-trips; try the shorter %.15g first.
  std::snprintf(buf, sizeof(buf), "%.15g", x);
  if (std::strtod(buf, nullptr) != x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
  }
  return buf;
}

std::string join_doubles(const std::vector<double>& v, char sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += fmt_double(v[i]);
  }
  return out;
}

void write_matrix(std::ostream& os, const std::string& name,
                  const std::vector<std::vector<double>>& m) {
  os << name << ' ' << m.size() << ' ' << (m.empty() ? 0 : m[0].size()) << '\n';
  for (const auto& row : m) os << join_doubles(row) << '\n';
}

void write_vector(std::ostream& os, const std::string& name,
                  const std::vector<double>& v) {
  os << name << ' ' << v.size() << '\n' << join_doubles(v) << '\n';
}

std::vector<std::vector<double>> read_matrix(std::istream& is,
                                             const std::string& expect_name) {
  std::string name;
  size_t rows = 0, cols = 0;
  if (!(is >> name >> rows >> cols) || name != expect_name)
    throw std::runtime_error("model file: expected matrix '" + expect_name + "'");
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
  for (auto& row : m)
    for (auto& x : row)
      if (!(is >> x)) throw std::runtime_error("model file: truncated matrix " + name);
  return m;
}

std::vector<double> read_vector(std::istream& is, const std::string& expect_name) {
  std::string name;
  size_t n = 0;
  if (!(is >> name >> n) || name != expect_name)
    throw std::runtime_error("model file: expected vector '" + expect_name + "'");
  std::vector<double> v(n);
  for (auto& x : v)
    if (!(is >> x)) throw std::runtime_error("model file: truncated vector " + name);
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace stm
