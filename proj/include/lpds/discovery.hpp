#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lpds/base_measure.hpp"

namespace lpds {

enum class TailMode {
  /// Empirical tail when 1/(B+1) can reach the level, Gaussian otherwise.
  automatic,
  /// Studentized pointwise statistic against a normal tail.
  gaussian,
  /// (1 + #{null >= observed}) / (B + 1); errors if B is too small for the level.
  empirical,
};

std::string_view to_string(TailMode m);
TailMode tail_mode_from_string(std::string_view name);

struct BumpScanOptions {
  int B = 10000;
  double sigma = 5.0;
  std::uint64_t seed = 0;
  int max_order = 10;
  TailMode tail = TailMode::automatic;
  std::optional<double> window_lo;
  std::optional<double> window_hi;
  unsigned threads = 0;
};

struct Region {
  double lo = 0.0;
  double hi = 0.0;
};

struct BumpScanResult {
  std::vector<double> grid;
  std::vector<double> d_hat;
  std::vector<double> pval;
  std::vector<double> neglog10;
  std::vector<bool> in_region;
  std::vector<Region> regions;
  double threshold = 0.0;  // -log10 of the one-sided normal tail at sigma
  bool gaussian_tail = false;
  std::vector<int> active;  // orders selected on the observed data
  int B = 0;
};

/// One-sided upper normal tail probability at `sigma`.
double sigma_tail(double sigma);

/// Pointwise bootstrap comparison of the threshold-selected Fourier estimate
/// of d on the data against B parametric-bootstrap null estimates.
BumpScanResult bump_scan(const BaseMeasure& bm, const EmpiricalCounts& data, const BumpScanOptions& options);

/// L(l, j) = LP_j of source l against bm, j = 1..m.
Eigen::MatrixXd lp_transform_matrix(const std::vector<EmpiricalCounts>& sources, const BaseMeasure& bm, int m);

struct DssResult {
  Eigen::MatrixXd L;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd U;
  Eigen::MatrixXd V;
  Eigen::MatrixXd coords;  // g x 2: (lambda_1 u_1l, lambda_2 u_2l)
  Eigen::VectorXd discovery_index;
};

/// Thin SVD L = U diag(lambda) V^T; sources are embedded by their rows of U
/// scaled by the top two singular values. Signs are fixed so the largest
/// entry of each left singular vector is positive.
DssResult dss_embed(const Eigen::MatrixXd& L);

}  // namespace lpds
