#pragma once

// Shared test utilities: independent numeric oracles and small fixtures.
// Oracles deliberately use different algorithms than the library (composite
// Simpson instead of a rational erfc approximation, rank correlation from
// first principles) so agreement is evidence, not tautology.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "prefkit/corpus.hpp"

namespace testutil {

// Phi(z) by compensated composite Simpson over the standard normal density.
// Truncation is O(h^4); Kahan summation keeps accumulation near machine
// epsilon, so the result is good to ~1e-14 — tight enough to referee a
// 1e-12 tolerance.
inline double phi_quadrature(double z) {
  const double a = 0.0;
  const double b = std::fabs(z);
  if (b == 0.0) return 0.5;
  const int n = 40000;  // even interval count; h <= 1.5e-4 for |z| <= 6
  const double h = (b - a) / n;
  auto pdf = [](double t) {
    return 0.3989422804014326779399460599343818684759 * std::exp(-0.5 * t * t);
  };
  double sum = pdf(a) + pdf(b);
  double comp = 0.0;  // Kahan carry
  for (int i = 1; i < n; ++i) {
    const double w = (i % 2 == 1) ? 4.0 : 2.0;
    const double term = w * pdf(a + i * h);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double integral = sum * h / 3.0;
  return z > 0 ? 0.5 + integral : 0.5 - integral;
}

// Spearman rank correlation with average ranks for ties.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x,
                       const std::vector<double>& y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Scratch directory wiped on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("prefkit_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A minimal well-formed corpus: `items` items, three polarity variants
// each, cycling through the given sections.
inline prefkit::ScenarioSet tiny_corpus(
    int items, const std::vector<std::string>& sections = {"A"}) {
  std::ostringstream csv;
  csv << "scenario_id,item_id,section,polarity,text\n";
  const char* pol[3] = {"Positive", "Neutral", "Negative"};
  const char* suffix[3] = {"pos", "neu", "neg"};
  for (int i = 0; i < items; ++i) {
    const std::string& section = sections[i % sections.size()];
    for (int v = 0; v < 3; ++v) {
      csv << section << "-" << i << "-" << suffix[v] << "," << section << "-"
          << i << "," << section << "," << pol[v] << ",scenario text " << i
          << " " << suffix[v] << "\n";
    }
  }
  return prefkit::load_scenario_set(csv.str()).set;
}

}  // namespace testutil
