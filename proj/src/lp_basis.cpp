#include "lpds/lp_basis.hpp"

#include <cmath>
#include <string>

namespace lpds {

namespace {

constexpr double kDegenerateRatio = 1e-8;

double weighted_dot(const Eigen::VectorXd& w, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (w.array() * a.array() * b.array()).sum();
}

}  // namespace

std::vector<double> t1(const BaseMeasure& bm) {
  const auto p = bm.pmf();
  const auto mid = bm.mid_cdf();
  double cubes = 0.0;
  for (double q : p) cubes += q * q * q;
  const double var = 1.0 - cubes;
  if (!(var > 1e-14)) throw Error("degenerate base measure: a single atom carries all the mass");
  const double scale = std::sqrt(12.0 / var);
  std::vector<double> out(bm.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * (mid[i] - 0.5);
  return out;
}

LPBasis LPBasis::build(const BaseMeasure& bm, int M) {
  if (M < 1) throw Error("basis order must be >= 1");
  LPBasis basis(bm);
  basis.requested_ = M;
  const auto r = static_cast<Eigen::Index>(bm.size());
  const Eigen::Map<const Eigen::VectorXd> w(bm.pmf().data(), r);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(r);

  const std::vector<double> first = t1(bm);
  std::vector<Eigen::VectorXd> cols;
  cols.emplace_back(Eigen::Map<const Eigen::VectorXd>(first.data(), r));

  // Each new order starts from T1 * T_{j-1}, which spans the same space as
  // T1^j modulo lower orders but is far better conditioned for large j.
  for (int j = 2; j <= M; ++j) {
    Eigen::VectorXd v = cols.front().cwiseProduct(cols.back());
    const double start = std::sqrt(weighted_dot(w, v, v));
    for (int pass = 0; pass < 2; ++pass) {
      v -= weighted_dot(w, v, one) * one;
      for (const auto& c : cols) v -= weighted_dot(w, v, c) * c;
    }
    const double norm = std::sqrt(weighted_dot(w, v, v));
    if (!(norm > kDegenerateRatio * start)) {
      for (int d = j; d <= M; ++d) basis.dropped_.push_back(d);
      break;
    }
    cols.push_back(v / norm);
  }

  basis.values_.resize(r, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    basis.values_.col(static_cast<Eigen::Index>(j)) = cols[j];
    basis.orders_.push_back(static_cast<int>(j) + 1);
  }
  return basis;
}

double LPBasis::value(int j, std::size_t i) const {
  if (!has_order(j)) throw Error("order " + std::to_string(j) + " is not in the basis");
  return values_(static_cast<Eigen::Index>(i), j - 1);
}

Eigen::VectorXd LPBasis::column(int j) const {
  if (!has_order(j)) throw Error("order " + std::to_string(j) + " is not in the basis");
  return values_.col(j - 1);
}

double LPBasis::eval_s(int j, double u) const {
  return value(j, base_.quantile_index(u));
}

double LPBasis::quantile_inner_product(int j) const {
  const auto x = base_.support();
  const auto p = base_.pmf();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * value(j, i) * p[i];
  return s;
}

}  // namespace lpds
