// Monte Carlo size and power of the bootstrap independence test under the
// power family of sub-distributions.
//
// For each cell (model, a, n) and replication r: draw a sample from the
// family at exponent a, draw B samples from the same family at a = 1, take
// the upper order statistics of the B null statistics as critical values,
// and count a rejection when delta_hat exceeds them. Replication r of cell c
// uses Rng::stream(seed, {c, r, 0}) for the data and {c, r, 1} for the null
// draws, so tables are reproducible for any worker count.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "crindep/simgen.hpp"

namespace crindep {

struct PowerStudyConfig {
  std::vector<LifetimeModel> models;
  std::vector<double> a_grid{1.0, 1.2, 1.5, 1.8, 2.0};
  std::vector<std::size_t> n_grid{25, 50, 75, 100};
  std::vector<double> alpha_levels{0.05, 0.01};
  std::size_t replications = 500;
  std::size_t bootstrap = 2000;
  /// pi_1..pi_{k-1}; the default is the two-cause design with pi_1 = 0.5.
  std::vector<double> pi{0.5};
  std::uint64_t seed = 20210601;
  unsigned threads = 0;

  void validate() const;
};

struct PowerRow {
  std::string model;
  double p = 0.0;
  double beta = 0.0;
  bool parametric = true;  // false for explicit pmf models (p, beta unset)
  double a = 1.0;
  std::size_t n = 0;
  double alpha = 0.05;
  std::size_t rejections = 0;
  std::size_t replications = 0;
  double power = 0.0;
  double mc_se = 0.0;
  std::string error;  // non-empty when the cell failed
};

struct PowerTable {
  std::vector<PowerRow> rows;
};

/// Empirical rejection rate for a single (family, n) cell at every level.
/// `cell` selects the stream family; rows come back in alpha order.
std::vector<PowerRow> power_cell(const DependentFamily& family, std::size_t n,
                                 const PowerStudyConfig& config, std::size_t cell);

PowerTable power_study(const PowerStudyConfig& config);

/// Long layout, header `model,p,beta,a,n,alpha,power,mc_se`.
void write_power_csv(std::ostream& out, const PowerTable& table);

/// Rows a x n, one column per model label and level.
void write_power_wide_csv(std::ostream& out, const PowerTable& table);

nlohmann::ordered_json to_json(const PowerTable& table);

}  // namespace crindep
