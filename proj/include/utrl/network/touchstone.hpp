#pragma once

// Touchstone v1 (.s2p) reader/writer, 2-port only. RI/MA/DB formats are
// accepted on read; files are written in RI. Internal canonical form is RI.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "utrl/network/twoport.hpp"

namespace utrl::network {

inline TwoPortRecord read_touchstone(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open touchstone file: " + path);

  double unit_scale = 1e9;  // touchstone default is GHz
  enum class Fmt { RI, MA, DB } fmt = Fmt::MA;
  double r_ohm = 50.0;
  bool have_header = false;

  TwoPortRecord rec;
  std::string line;
  while (std::getline(in, line)) {
    const auto bang = line.find('!');
    if (bang != std::string::npos) line.erase(bang);
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
    if (trimmed.empty()) continue;

    if (trimmed[0] == '#') {
      std::istringstream hs(trimmed.substr(1));
      std::string tok;
      std::vector<std::string> toks;
      while (hs >> tok) {
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return std::toupper(c); });
        toks.push_back(tok);
      }
      for (size_t i = 0; i < toks.size(); ++i) {
        const std::string& t = toks[i];
        if (t == "HZ") unit_scale = 1.0;
        else if (t == "KHZ") unit_scale = 1e3;
        else if (t == "MHZ") unit_scale = 1e6;
        else if (t == "GHZ") unit_scale = 1e9;
        else if (t == "RI") fmt = Fmt::RI;
        else if (t == "MA") fmt = Fmt::MA;
        else if (t == "DB") fmt = Fmt::DB;
        else if (t == "R" && i + 1 < toks.size()) r_ohm = std::stod(toks[i + 1]);
        else if (t == "S") continue;
      }
      have_header = true;
      continue;
    }

    std::istringstream ds(trimmed);
    std::vector<double> vals;
    double x;
    while (ds >> x) vals.push_back(x);
    if (vals.empty()) continue;
    if (vals.size() != 9)
      throw NetworkError("touchstone line with " + std::to_string(vals.size()) +
                         " values; expected 9 (2-port): " + path);

    auto decode = [&](double a, double b) -> Complex {
      switch (fmt) {
        case Fmt::RI: return {a, b};
        case Fmt::MA: return std::polar(a, b * M_PI / 180.0);
        case Fmt::DB: return std::polar(std::pow(10.0, a / 20.0), b * M_PI / 180.0);
      }
      return {};
    };

    // v1 2-port column order: S11 S21 S12 S22
    Mat<Complex> s(2, 2);
    s(0, 0) = decode(vals[1], vals[2]);
    s(1, 0) = decode(vals[3], vals[4]);
    s(0, 1) = decode(vals[5], vals[6]);
    s(1, 1) = decode(vals[7], vals[8]);
    rec.frequencies_hz.push_back(vals[0] * unit_scale);
    rec.s.push_back(s);
  }

  if (!have_header) throw NetworkError("touchstone file missing '#' header: " + path);
  if (rec.s.empty()) throw NetworkError("touchstone file has no data rows: " + path);
  rec.reference_ohm = r_ohm;
  rec.validate();
  return rec;
}

inline void write_touchstone(const TwoPortRecord& rec, const std::string& path) {
  rec.validate();
  std::ofstream out(path);
  if (!out) throw NetworkError("cannot write touchstone file: " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "# Hz S RI R %.17g\n", rec.reference_ohm);
  out << buf;
  for (size_t i = 0; i < rec.size(); ++i) {
    const Mat<Complex>& s = rec.s[i];
    std::snprintf(buf, sizeof buf, "%.17g", rec.frequencies_hz[i]);
    out << buf;
    const Complex order[4] = {s(0, 0), s(1, 0), s(0, 1), s(1, 1)};
    for (const Complex& z : order) {
      std::snprintf(buf, sizeof buf, " %.17g %.17g", z.real(), z.imag());
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace utrl::network
