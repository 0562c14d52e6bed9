#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lpds/base_measure.hpp"

namespace lpds {

/// T1(x) = sqrt(12) (Fmid(x) - 1/2) / sqrt(1 - sum p0^3).
std::vector<double> t1(const BaseMeasure& bm);

/// LP-orthonormal polynomials of Fmid under the p0-weighted inner product.
/// Columns of values() are the retained orders, in increasing order.
class LPBasis {
 public:
  /// Orders 1..M by weighted Gram-Schmidt (two passes). Orders whose
  /// residual falls below 1e-8 of their starting norm are dropped, and so
  /// is every order above the first dropped one.
  static LPBasis build(const BaseMeasure& bm, int M);

  const BaseMeasure& base() const { return base_; }
  int requested_order() const { return requested_; }
  std::span<const int> orders() const { return orders_; }
  std::span<const int> dropped() const { return dropped_; }
  int rank() const { return static_cast<int>(orders_.size()); }
  bool has_order(int j) const { return j >= 1 && j <= rank(); }

  /// r x rank() table, values()(i, j-1) = T_j(x_i).
  const Eigen::MatrixXd& values() const { return values_; }
  double value(int j, std::size_t i) const;
  Eigen::VectorXd column(int j) const;

  /// S_j(u) = T_j(Q0(u)); throws for orders not retained.
  double eval_s(int j, double u) const;

  /// <Q0, S_j> on (0,1), i.e. sum_x x T_j(x) p0(x).
  double quantile_inner_product(int j) const;

 private:
  explicit LPBasis(const BaseMeasure& bm) : base_(bm) {}

  BaseMeasure base_;
  int requested_ = 0;
  std::vector<int> orders_;
  std::vector<int> dropped_;
  Eigen::MatrixXd values_;
};

}  // namespace lpds
