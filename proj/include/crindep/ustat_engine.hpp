// Degree-3 U-statistics for the time/cause departure measure.
//
// Both kernels are the average of the three "two below the third" indicators
// over the argument rotations, so E[psi_1j] = P(max(T1,T2) <= T3, C1=C2=j)
// and E[psi_2] = P(max(T1,T2) <= T3) hold exactly, ties included. Sums are
// kept as integer indicator counts; the U-statistic is count / (3 C(n,3)).

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "crindep/core_model.hpp"

namespace crindep {

using Count = unsigned __int128;

struct Observation {
  Time time;
  Cause cause;
};

/// Number of fired indicators (0..3); the kernel value is this over 3.
int kernel_psi1j_count(const std::array<Observation, 3>& triple, Cause j);
int kernel_psi2_count(const std::array<Time, 3>& triple);

double kernel_psi1j(const std::array<Observation, 3>& triple, Cause j);
double kernel_psi2(const std::array<Time, 3>& triple);

struct UStatistics {
  std::size_t n = 0;
  int k = 0;
  std::vector<Count> u1_counts;  // indicator counts per cause
  Count u2_count = 0;
  Count denominator = 0;  // 3 * C(n, 3)
  std::vector<double> u1;
  double u2 = 0.0;
  std::vector<double> proportions;
  double delta_hat = 0.0;
};

/// Thrown when fewer than three observations are supplied.
class InsufficientSample : public std::invalid_argument {
 public:
  InsufficientSample() : std::invalid_argument("at least 3 observations required") {}
};

/// Exact enumeration over all C(n,3) triples. O(n^3 k); test oracle.
UStatistics u_statistics_bruteforce(const Sample& sample);

/// Counting route: O(n log n + nk), identical counts to the enumeration.
UStatistics u_statistics_fast(const Sample& sample);

/// U-statistics with delta_hat = sum_j U_1j / pi_j - U_2 (0/0 taken as 0).
UStatistics delta_hat(const Sample& sample);

Count choose2(std::uint64_t m);
Count choose3(std::uint64_t m);
double to_double(Count c);

/// Reusable buffers for repeated delta_hat evaluation on raw arrays.
/// Not thread-safe; keep one per worker.
class DeltaEvaluator {
 public:
  explicit DeltaEvaluator(int k);

  /// Same value as delta_hat(Sample(times, causes, k)).delta_hat, without
  /// validation and without allocating after warm-up.
  double operator()(std::span<const Time> times, std::span<const Cause> causes);

 private:
  int k_;
  std::vector<std::uint64_t> keys_;
  std::vector<std::uint64_t> cumulative_;
  std::vector<std::uint64_t> group_;
  std::vector<Count> sums_;
};

}  // namespace crindep
