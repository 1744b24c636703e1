#ifndef STM_IO_HPP
#define STM_IO_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

namespace stm {

// Shortest round-trip decimal form, identical across runs.
std::string fmt_double(double x);

std::string join_doubles(const std::vector<double>& v, char sep = ' ');

void write_matrix(std::ostream& os, const std::string& name,
                  const std::vector<std::vector<double>>& m);
void write_vector(std::ostream& os, const std::string& name,
                  const std::vector<double>& v);

// Reader for the line-oriented model files: "name rows cols" then row lines.
std::vector<std::vector<double>> read_matrix(std::istream& is,
                                             const std::string& expect_name);
std::vector<double> read_vector(std::istream& is, const std::string& expect_name);

std::vector<std::string> split(const std::string& s, char sep);

std::string read_file(const std::string& path);

}  // namespace stm

#endif
