#include "lpds/sharpen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "lpds/rng.hpp"

namespace lpds {

double LPCoefficients::at(int j) const {
  for (std::size_t k = 0; k < orders.size(); ++k)
    if (orders[k] == j) return values[k];
  throw Error("no LP coefficient of order " + std::to_string(j));
}

double LPCoefficients::sum_squares(std::span<const int> subset) const {
  double s = 0.0;
  for (int j : subset) s += at(j) * at(j);
  return s;
}

LPCoefficients lp_coefficients(const LPBasis& basis, std::span<const double> ptilde, std::int64_t n) {
  if (ptilde.size() != basis.base().size()) throw Error("empirical pmf does not match the basis support");
  const Eigen::Map<const Eigen::VectorXd> p(ptilde.data(), static_cast<Eigen::Index>(ptilde.size()));
  const Eigen::VectorXd lp = basis.values().transpose() * p;
  LPCoefficients c;
  c.n = n;
  c.orders.assign(basis.orders().begin(), basis.orders().end());
  c.values.assign(lp.data(), lp.data() + lp.size());
  return c;
}

LPCoefficients lp_coefficients(const LPBasis& basis, const EmpiricalCounts& data) {
  return lp_coefficients(basis, empirical_on_support(basis.base(), data), data.n());
}

std::string_view to_string(Selection s) {
  switch (s) {
    case Selection::threshold: return "threshold";
    case Selection::aic: return "aic";
    case Selection::all: return "all";
  }
  return "threshold";
}

Selection selection_from_string(std::string_view name) {
  if (name == "threshold") return Selection::threshold;
  if (name == "aic") return Selection::aic;
  if (name == "all") return Selection::all;
  throw Error("unknown selection method '" + std::string(name) + "'");
}

std::vector<int> select(const LPCoefficients& coefs, Selection method) {
  std::vector<int> out;
  const double n = static_cast<double>(coefs.n);
  switch (method) {
    case Selection::all:
      out = coefs.orders;
      break;
    case Selection::threshold: {
      if (coefs.n < 1) throw Error("selection needs n >= 1");
      const double cut = 2.0 / std::sqrt(n);
      for (std::size_t k = 0; k < coefs.orders.size(); ++k)
        if (std::abs(coefs.values[k]) > cut) out.push_back(coefs.orders[k]);
      break;
    }
    case Selection::aic: {
      if (coefs.n < 1) throw Error("selection needs n >= 1");
      std::vector<std::size_t> idx(coefs.orders.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(coefs.values[a]) > std::abs(coefs.values[b]);
      });
      double cum = 0.0, best = 0.0;
      std::size_t best_m = 0;
      for (std::size_t m = 1; m <= idx.size(); ++m) {
        cum += coefs.values[idx[m - 1]] * coefs.values[idx[m - 1]];
        const double aic = cum - 2.0 * static_cast<double>(m) / n;
        if (aic > best) {
          best = aic;
          best_m = m;
        }
      }
      for (std::size_t m = 0; m < best_m; ++m) out.push_back(coefs.orders[idx[m]]);
      break;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

BaseMeasure cover_data(const BaseMeasure& bm, const EmpiricalCounts& data) {
  bool inside = true;
  for (std::size_t i = 0; i < data.size() && inside; ++i)
    if (data.counts()[i] > 0 && !bm.index_of(data.values()[i])) inside = false;
  if (inside) return bm;

  const ModelSpec& s = bm.spec();
  if (s.family == Family::custom || s.family == Family::discretized_exponential)
    throw Error("observed values fall outside the support of a " + std::string(to_string(s.family)) + " base");
  ModelSpec t = s;
  if (t.lower) t.lower = std::min(*t.lower, data.min_value());
  if (t.upper) t.upper = std::max(*t.upper, data.max_value());
  return t.truncation.mode == Truncation::Mode::tail ? make_parametric(t, data) : make_parametric(t);
}

std::string_view to_string(Form f) { return f == Form::fourier ? "fourier" : "maxent"; }

Form form_from_string(std::string_view name) {
  if (name == "fourier") return Form::fourier;
  if (name == "maxent") return Form::maxent;
  throw Error("unknown model form '" + std::string(name) + "'");
}

namespace {

void check_active(const LPBasis& basis, std::span<const int> active) {
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (!basis.has_order(active[k])) throw Error("active order " + std::to_string(active[k]) + " is not in the basis");
    if (k > 0 && active[k] <= active[k - 1]) throw Error("active orders must be strictly increasing");
  }
}

Eigen::MatrixXd active_columns(const LPBasis& basis, std::span<const int> active) {
  Eigen::MatrixXd t(basis.values().rows(), static_cast<Eigen::Index>(active.size()));
  for (std::size_t k = 0; k < active.size(); ++k) t.col(static_cast<Eigen::Index>(k)) = basis.column(active[k]);
  return t;
}

// Log-normalizer and fitted pmf of p0 exp(T theta - psi).
struct ExpFamilyState {
  double psi = 0.0;
  Eigen::VectorXd q;
};

ExpFamilyState exp_family(const Eigen::Ref<const Eigen::VectorXd>& p0, const Eigen::MatrixXd& t, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd s = t * theta;
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (p0[i] > 0.0) top = std::max(top, s[i]);
  double z = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (p0[i] > 0.0) z += p0[i] * std::exp(s[i] - top);
  ExpFamilyState st;
  st.psi = top + std::log(z);
  st.q.resize(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) st.q[i] = p0[i] > 0.0 ? p0[i] * std::exp(s[i] - st.psi) : 0.0;
  return st;
}

}  // namespace

SharpenedModel ds_fourier(const LPBasis& basis, const LPCoefficients& coefs, std::span<const int> active) {
  check_active(basis, active);
  SharpenedModel m(basis);
  m.form_ = Form::fourier;
  m.active_.assign(active.begin(), active.end());
  for (int j : active) m.coef_.push_back(coefs.at(j));
  m.targets_ = m.coef_;
  const auto p0 = basis.base().pmf();
  m.pmf_.assign(p0.begin(), p0.end());
  if (!active.empty()) {
    for (std::size_t i = 0; i < m.pmf_.size(); ++i) {
      double d = 1.0;
      for (std::size_t k = 0; k < active.size(); ++k) d += m.coef_[k] * basis.value(active[k], i);
      m.pmf_[i] = p0[i] * d;
      if (m.pmf_[i] < 0.0) m.negative_ = true;
    }
  }
  return m;
}

SharpenedModel maxent_fit(const LPBasis& basis, std::span<const int> active, std::span<const double> targets,
                          const MaxentOptions& options) {
  check_active(basis, active);
  if (targets.size() != active.size()) throw Error("maxent: one target per active order is required");
  SharpenedModel m(basis);
  m.form_ = Form::maxent;
  m.active_.assign(active.begin(), active.end());
  m.targets_.assign(targets.begin(), targets.end());
  const auto p0span = basis.base().pmf();
  m.pmf_.assign(p0span.begin(), p0span.end());
  m.coef_.assign(active.size(), 0.0);
  if (active.empty()) return m;

  const auto k = static_cast<Eigen::Index>(active.size());
  const Eigen::Map<const Eigen::VectorXd> p0(p0span.data(), static_cast<Eigen::Index>(p0span.size()));
  const Eigen::MatrixXd t = active_columns(basis, active);
  const Eigen::Map<const Eigen::VectorXd> b(targets.data(), k);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
  ExpFamilyState st = exp_family(p0, t, theta);
  auto gradient = [&](const ExpFamilyState& s) -> Eigen::VectorXd { return t.transpose() * s.q - b; };
  Eigen::VectorXd g = gradient(st);
  double dual = st.psi - theta.dot(b);

  int it = 0;
  for (; g.norm() >= options.gradient_tolerance; ++it) {
    if (it >= options.max_iterations) {
      std::ostringstream os;
      os << "maxent fit did not converge in " << options.max_iterations
         << " iterations (dual gradient norm " << g.norm() << ")";
      throw Error(os.str());
    }
    const Eigen::VectorXd mean = t.transpose() * st.q;
    const Eigen::MatrixXd h = t.transpose() * st.q.asDiagonal() * t - mean * mean.transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = g;

    // Step halving until the dual decreases (or, at roundoff level, the gradient shrinks).
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 60; ++half, scale *= 0.5) {
      const Eigen::VectorXd cand = theta - scale * step;
      ExpFamilyState cs = exp_family(p0, t, cand);
      const double cdual = cs.psi - cand.dot(b);
      const Eigen::VectorXd cg = gradient(cs);
      if (cdual < dual - 1e-4 * scale * g.dot(step) || (cdual <= dual + 1e-13 * std::max(1.0, std::abs(dual)) &&
                                                        cg.norm() < g.norm())) {
        theta = cand;
        st = std::move(cs);
        g = cg;
        dual = cdual;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "maxent line search stalled (dual gradient norm " << g.norm() << ")";
      throw Error(os.str());
    }
    if (theta.norm() > options.theta_limit)
      throw Error("maxent targets appear unattainable: parameters diverge");
  }

  m.coef_.assign(theta.data(), theta.data() + k);
  m.psi_ = st.psi;
  m.iterations_ = it;
  m.gradient_norm_ = g.norm();
  m.pmf_.assign(st.q.data(), st.q.data() + st.q.size());
  return m;
}

SharpenedModel maxent_fit(const LPBasis& basis, const LPCoefficients& coefs, std::span<const int> active,
                          const MaxentOptions& options) {
  std::vector<double> targets;
  for (int j : active) targets.push_back(coefs.at(j));
  return maxent_fit(basis, active, targets, options);
}

std::vector<double> SharpenedModel::cdf() const {
  std::vector<double> c(pmf_.size());
  std::partial_sum(pmf_.begin(), pmf_.end(), c.begin());
  return c;
}

double SharpenedModel::mean() const {
  const auto x = base().support();
  double s = 0.0;
  for (std::size_t i = 0; i < pmf_.size(); ++i) s += x[i] * pmf_[i];
  return s;
}

double SharpenedModel::comparison_density_at(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = 0; k < active_.size(); ++k) s += coef_[k] * basis_.value(active_[k], i);
  return form_ == Form::fourier ? 1.0 + s : std::exp(s - psi_);
}

double SharpenedModel::comparison_density(double u) const {
  return comparison_density_at(base().quantile_index(u));
}

std::vector<std::pair<double, double>> SharpenedModel::curve() const {
  const auto c = base().cdf();
  std::vector<std::pair<double, double>> out;
  out.reserve(c.size() + 1);
  out.emplace_back(0.0, comparison_density_at(0));
  for (std::size_t i = 0; i + 1 < c.size(); ++i) out.emplace_back(c[i], comparison_density_at(i + 1));
  out.emplace_back(1.0, comparison_density_at(c.size() - 1));
  return out;
}

EmpiricalCounts SharpenedModel::sample(std::int64_t n, std::uint64_t seed) const {
  if (negative_) throw Error("refusing to sample from a fourier model with negative probabilities");
  if (n < 1) throw Error("sample size must be >= 1");
  Rng rng(seed);
  const std::vector<double> c = cdf();
  return counts_on_support(base(), draw_counts(c, n, rng));
}

}  // namespace lpds
