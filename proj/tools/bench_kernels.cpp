// Micro-benchmark for the two OpenMP kernels against their single-threaded
// reference implementations: the loss/gradient pair reduction and the
// transitivity triplet scan. Besides wall time it verifies that parallel and
// serial results are bitwise identical, which is the property the test suite
// relies on.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "prefkit/aggregation.hpp"
#include "prefkit/coherence.hpp"
#include "prefkit/normal.hpp"
#include "prefkit/rng.hpp"
#include "prefkit/thurstonian.hpp"

using namespace prefkit;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

// Full comparison graph over n options with win counts drawn from a planted
// utility spread, the same shape the optimizer sees in production.
FitProblem planted_problem(std::size_t n, int trials_per_pair,
                           std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<double> mu(n);
  for (auto& m : mu) m = 6.0 * rng.uniform() - 3.0;

  FitProblem problem;
  problem.options.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    problem.options.push_back("o" + std::to_string(i));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double p = std_normal_cdf(mu[x] - mu[y]);
      int wins = 0;
      for (int t = 0; t < trials_per_pair; ++t)
        wins += rng.uniform() < p ? 1 : 0;
      problem.pairs.push_back({static_cast<std::uint32_t>(x),
                               static_cast<std::uint32_t>(y), wins,
                               trials_per_pair});
    }
  }
  return problem;
}

PreferenceMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<std::string> options;
  options.reserve(n);
  for (std::size_t i = 0; i < n; ++i) options.push_back("o" + std::to_string(i));
  PreferenceMatrix matrix(std::move(options));
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      matrix.set_pair(x, y, static_cast<int>(rng.below(11)), 10);
  return matrix;
}

bool bitwise_equal(const LossGrad& a, const LossGrad& b) {
  if (a.loss != b.loss || a.grad.size() != b.grad.size()) return false;
  for (std::size_t i = 0; i < a.grad.size(); ++i)
    if (a.grad[i] != b.grad[i]) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel benchmark"};
  std::size_t n_options = 144;
  int trials_per_pair = 10;
  int evals = 200;
  long long n_triplets = 200000;
  std::uint64_t seed = 42;
  app.add_option("--options", n_options, "Options in the comparison graph");
  app.add_option("--trials", trials_per_pair, "Trials per pair");
  app.add_option("--evals", evals, "Loss/gradient evaluations to time");
  app.add_option("--triplets", n_triplets, "Sampled triplets per scan");
  app.add_option("--seed", seed, "RNG seed for the planted instances");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  std::printf("openmp: %d thread(s)\n", omp_get_max_threads());
#else
  std::printf("openmp: not compiled in\n");
#endif
  std::printf("graph: %zu options, %zu pairs, %d trials/pair\n\n", n_options,
              n_options * (n_options - 1) / 2, trials_per_pair);

  const FitProblem problem = planted_problem(n_options, trials_per_pair, seed);
  FitConfig config;
  const auto params = initial_params(problem, config);

  auto start = Clock::now();
  LossGrad serial;
  for (int i = 0; i < evals; ++i)
    serial = loss_and_gradient_serial(params, problem, config);
  const double serial_ms = ms_since(start);

  start = Clock::now();
  LossGrad parallel;
  for (int i = 0; i < evals; ++i)
    parallel = loss_and_gradient(params, problem, config);
  const double parallel_ms = ms_since(start);

  std::printf("loss+gradient  x%d   serial %8.2f ms   parallel %8.2f ms   "
              "speedup %.2fx   bitwise %s\n",
              evals, serial_ms, parallel_ms, serial_ms / parallel_ms,
              bitwise_equal(serial, parallel) ? "equal" : "DIFFERENT");

  const PreferenceMatrix matrix = random_matrix(n_options, seed + 1);
  for (const auto mode :
       {TransitivityMode::Exhaustive, TransitivityMode::Sampled}) {
    start = Clock::now();
    const auto ts = transitivity_serial(matrix, n_triplets, seed, mode);
    const double ts_ms = ms_since(start);
    start = Clock::now();
    const auto tp = transitivity(matrix, n_triplets, seed, mode);
    const double tp_ms = ms_since(start);
    const bool same = ts.rate == tp.rate && ts.cycles == tp.cycles &&
                      ts.sampled == tp.sampled;
    std::printf("transitivity %-10s serial %8.2f ms   parallel %8.2f ms   "
                "speedup %.2fx   bitwise %s   (rate %.4f over %lld)\n",
                to_string(mode), ts_ms, tp_ms, ts_ms / tp_ms,
                same ? "equal" : "DIFFERENT", tp.rate, tp.sampled);
  }
  return 0;
}
