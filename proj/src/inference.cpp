#include "lpds/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "lpds/parallel.hpp"
#include "lpds/rng.hpp"

namespace lpds {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<CoefficientRow> coefficient_rows(const LPCoefficients& c) {
  std::vector<CoefficientRow> rows;
  for (int j : c.orders) rows.push_back({j, c.at(j), c.z(j)});
  return rows;
}

bool at_least(double value, double observed) {
  return value >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

LPBasis basis_for(const BaseMeasure& bm, int max_order) {
  return LPBasis::build(bm, std::min<int>(max_order, static_cast<int>(bm.size()) - 1));
}

std::vector<int> orders_for(const LPBasis& basis, const LPCoefficients& c, Selection sel,
                            const std::vector<int>& fixed) {
  if (fixed.empty()) return select(c, sel);
  for (int j : fixed)
    if (!basis.has_order(j)) throw Error("order " + std::to_string(j) + " is not available for this base");
  return fixed;
}

Statistic make_lpgof(int max_order, Selection sel, std::vector<int> fixed) {
  return [=](const BaseMeasure& null, const EmpiricalCounts& x) {
    const BaseMeasure bm = cover_data(null, x);
    const LPBasis basis = basis_for(bm, max_order);
    const LPCoefficients c = lp_coefficients(basis, x);
    const std::vector<int> J = orders_for(basis, c, sel, fixed);
    return static_cast<double>(c.n) * c.sum_squares(J);
  };
}

Statistic make_kl(int max_order, Selection sel, std::vector<int> fixed) {
  return [=](const BaseMeasure& null, const EmpiricalCounts& x) {
    const BaseMeasure bm = cover_data(null, x);
    const LPBasis basis = basis_for(bm, max_order);
    const LPCoefficients c = lp_coefficients(basis, x);
    const std::vector<int> J = orders_for(basis, c, sel, fixed);
    if (J.empty()) return 0.0;
    return relative_entropy(maxent_fit(basis, c, J));
  };
}

BaseMeasure fitted_null(const ModelSpec& family, const EmpiricalCounts& x) {
  ModelSpec s = fit_parameters(family, x);
  s.truncation = family.truncation;
  return make_parametric(s, x);
}

// Runs `body(b, rng)` for b < B, recording NaN for replicates that throw.
template <class Body>
std::vector<double> replicates(const BootstrapOptions& o, Body&& body) {
  if (o.B < 1) throw Error("bootstrap needs B >= 1");
  std::vector<double> out(static_cast<std::size_t>(o.B), kNaN);
  const Rng root(o.seed);
  parallel_for(
      out.size(),
      [&](std::size_t b) {
        Rng rng = root.child(b);
        try {
          out[b] = body(b, rng);
        } catch (const Error&) {
          out[b] = kNaN;
        }
      },
      o.threads);
  return out;
}

int count_skipped(const std::vector<double>& v, double max_fraction, const char* what) {
  const auto skipped = static_cast<int>(std::count_if(v.begin(), v.end(), [](double t) { return std::isnan(t); }));
  if (skipped > max_fraction * static_cast<double>(v.size())) {
    std::ostringstream os;
    os << what << ": " << skipped << " of " << v.size() << " bootstrap replicates failed";
    throw Error(os.str());
  }
  return skipped;
}

double exceedance_p(const std::vector<double>& boot, double observed) {
  std::size_t valid = 0, hits = 0;
  for (double t : boot) {
    if (std::isnan(t)) continue;
    ++valid;
    if (at_least(t, observed)) ++hits;
  }
  return (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(valid));
}

EmpiricalCounts draw_from(const BaseMeasure& bm, std::int64_t n, Rng& rng) {
  return counts_on_support(bm, draw_counts(bm.cdf(), n, rng));
}

}  // namespace

double chisq_upper_tail(double x, double df) {
  if (!(df > 0.0)) throw Error("chi-square tail needs df > 0");
  if (std::isnan(x)) throw Error("chi-square tail of NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

GofReport pearson_chisq(const EmpiricalCounts& data, const BaseMeasure& bm) {
  GofReport r;
  r.method = "pearson";
  r.df = static_cast<int>(bm.size()) - 1;
  const double n = static_cast<double>(data.n());
  std::vector<double> obs(bm.size(), 0.0);
  bool impossible = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.counts()[i] == 0) continue;
    auto j = bm.index_of(data.values()[i]);
    if (!j || bm.pmf()[*j] <= 0.0) {
      impossible = true;
      continue;
    }
    obs[*j] += static_cast<double>(data.counts()[i]);
  }
  if (impossible) {
    r.statistic = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.note = "positive count on a zero-probability cell";
    return r;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < bm.size(); ++i) {
    const double p0 = bm.pmf()[i];
    if (p0 <= 0.0) continue;
    const double d = obs[i] / n - p0;
    s += d * d / p0;
  }
  r.statistic = n * s;
  r.p_value = chisq_upper_tail(r.statistic, r.df);
  return r;
}

GofReport lp_gof(const EmpiricalCounts& data, const LPBasis& basis, std::span<const int> active) {
  const LPCoefficients c = lp_coefficients(basis, data);
  GofReport r;
  r.method = "lpgof";
  r.coefficients = coefficient_rows(c);
  r.active.assign(active.begin(), active.end());
  r.df = static_cast<int>(active.size());
  if (active.empty()) {
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.note = "no evidence of lack-of-fit";
    return r;
  }
  r.statistic = static_cast<double>(c.n) * c.sum_squares(active);
  r.p_value = chisq_upper_tail(r.statistic, r.df);
  return r;
}

GofReport lp_gof(const EmpiricalCounts& data, const LPBasis& basis, Selection selection) {
  const std::vector<int> J = select(lp_coefficients(basis, data), selection);
  GofReport r = lp_gof(data, basis, J);
  r.selection = std::string(to_string(selection));
  return r;
}

GofReport proportion_ztest(std::int64_t successes, std::int64_t n, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw Error("proportion test needs 0 < p0 < 1");
  if (n < 1 || successes < 0 || successes > n) throw Error("proportion test needs 0 <= successes <= n, n >= 1");
  const double nn = static_cast<double>(n);
  const double lp1 = (static_cast<double>(successes) / nn - p0) / std::sqrt(p0 * (1.0 - p0));
  const double z = std::sqrt(nn) * lp1;
  GofReport r;
  r.method = "proportion_z";
  r.statistic = z * z;
  r.df = 1;
  r.p_value = std::erfc(std::abs(z) / std::sqrt(2.0));
  r.coefficients.push_back({1, lp1, z});
  r.active = {1};
  r.note = "z = sqrt(n) LP_1 of the binary basis";
  return r;
}

double relative_entropy(const SharpenedModel& model) {
  if (model.form() != Form::maxent) throw Error("relative entropy needs a maxent model");
  double s = 0.0;
  for (std::size_t k = 0; k < model.coef().size(); ++k) s += model.coef()[k] * model.targets()[k];
  return s - model.psi();
}

double direct_kl(const SharpenedModel& model) {
  const auto p0 = model.base().pmf();
  const auto p = model.pmf();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / p0[i]);
  return s;
}

Statistic pearson_statistic() {
  return [](const BaseMeasure& null, const EmpiricalCounts& x) { return pearson_chisq(x, null).statistic; };
}

Statistic lpgof_statistic(int max_order, Selection selection) { return make_lpgof(max_order, selection, {}); }

Statistic lpgof_statistic(std::vector<int> orders) {
  if (orders.empty()) throw Error("fixed-order statistic needs at least one order");
  std::sort(orders.begin(), orders.end());
  return make_lpgof(orders.back(), Selection::all, orders);
}

Statistic kl_statistic(int max_order, Selection selection) { return make_kl(max_order, selection, {}); }

Statistic kl_statistic(std::vector<int> orders) {
  if (orders.empty()) throw Error("fixed-order statistic needs at least one order");
  std::sort(orders.begin(), orders.end());
  return make_kl(orders.back(), Selection::all, orders);
}

double bootstrap_se(const Statistic& stat, const BaseMeasure& bm, const EmpiricalCounts& data,
                    const BootstrapOptions& options) {
  if (options.B < 2) throw Error("bootstrap standard error needs B >= 2");
  std::vector<double> cum(data.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) cum[i] = acc += static_cast<double>(data.counts()[i]);
  const auto boot = replicates(options, [&](std::size_t, Rng& rng) {
    const auto counts = draw_counts(cum, data.n(), rng);
    std::vector<std::pair<double, std::int64_t>> pairs;
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] > 0) pairs.emplace_back(data.values()[i], counts[i]);
    return stat(bm, EmpiricalCounts::from_pairs(std::move(pairs)));
  });
  count_skipped(boot, options.max_skip_fraction, "bootstrap standard error");
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double t : boot) {
    if (std::isnan(t)) continue;
    ++k;
    const double d = t - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (t - mean);
  }
  if (k < 2) throw Error("bootstrap standard error: fewer than 2 usable replicates");
  return std::sqrt(m2 / static_cast<double>(k - 1));
}

GofReport parametric_bootstrap_test(const Statistic& stat, const BaseMeasure& bm, const EmpiricalCounts& data,
                                    const BootstrapOptions& options) {
  GofReport r;
  r.method = "parametric_bootstrap";
  r.statistic = stat(bm, data);
  const auto boot = replicates(options, [&](std::size_t, Rng& rng) { return stat(bm, draw_from(bm, data.n(), rng)); });
  BootstrapMeta meta;
  meta.B = options.B;
  meta.seed = options.seed;
  meta.skipped = count_skipped(boot, options.max_skip_fraction, "parametric bootstrap");
  r.p_value = exceedance_p(boot, r.statistic);
  r.bootstrap = meta;
  return r;
}

GofReport double_bootstrap_test(const Statistic& stat, const ModelSpec& family, const EmpiricalCounts& data,
                                int B_inner, const BootstrapOptions& options) {
  if (B_inner < 0) throw Error("B_inner must be >= 0");
  if (!is_refittable(family.family)) {
    GofReport r = parametric_bootstrap_test(stat, make_parametric(family, data), data, options);
    r.note = "family has no estimated parameters; single-level bootstrap";
    return r;
  }
  const BaseMeasure fitted = fitted_null(family, data);
  const double observed = stat(fitted, data);
  const std::int64_t n = data.n();

  std::vector<double> inner_p(static_cast<std::size_t>(options.B), kNaN);
  const auto boot = replicates(options, [&](std::size_t b, Rng& rng) {
    const EmpiricalCounts x = draw_from(fitted, n, rng);
    const BaseMeasure null_b = fitted_null(family, x);
    const double t = stat(null_b, x);
    if (B_inner > 0) {
      std::vector<double> inner(static_cast<std::size_t>(B_inner), kNaN);
      for (int i = 0; i < B_inner; ++i) {
        Rng irng = rng.child(static_cast<std::uint64_t>(i));
        try {
          const EmpiricalCounts y = draw_from(null_b, n, irng);
          inner[static_cast<std::size_t>(i)] = stat(fitted_null(family, y), y);
        } catch (const Error&) {
        }
      }
      count_skipped(inner, options.max_skip_fraction, "inner bootstrap");
      inner_p[b] = exceedance_p(inner, t);
    }
    return t;
  });

  GofReport r;
  r.method = B_inner > 0 ? "double_bootstrap" : "refit_bootstrap";
  r.statistic = observed;
  BootstrapMeta meta;
  meta.B = options.B;
  meta.B_inner = B_inner;
  meta.seed = options.seed;
  meta.refit = true;
  meta.skipped = count_skipped(boot, options.max_skip_fraction, "outer bootstrap");
  const double single = exceedance_p(boot, observed);
  if (B_inner == 0) {
    r.p_value = single;
  } else {
    // Calibrate: share of outer replicates whose own p-value is at most ours.
    std::size_t valid = 0, hits = 0;
    for (std::size_t b = 0; b < boot.size(); ++b) {
      if (std::isnan(boot[b]) || std::isnan(inner_p[b])) continue;
      ++valid;
      if (inner_p[b] <= single + 1e-12) ++hits;
    }
    r.p_value = std::min(1.0, (1.0 + static_cast<double>(hits)) / (1.0 + static_cast<double>(valid)));
  }
  r.bootstrap = meta;
  return r;
}

}  // namespace lpds
