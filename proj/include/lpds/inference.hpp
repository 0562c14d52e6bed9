#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpds/base_measure.hpp"
#include "lpds/lp_basis.hpp"
#include "lpds/sharpen.hpp"

namespace lpds {

struct CoefficientRow {
  int order = 0;
  double lp = 0.0;
  double z = 0.0;  // sqrt(n) LP_j
};

struct BootstrapMeta {
  int B = 0;
  int B_inner = 0;
  std::uint64_t seed = 0;
  bool refit = false;
  int skipped = 0;
};

struct GofReport {
  std::string method;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::vector<CoefficientRow> coefficients;
  std::string selection;
  std::vector<int> active;
  std::optional<BootstrapMeta> bootstrap;
  std::string note;
};

/// P(chi2_df > x) via the regularized upper incomplete gamma function.
double chisq_upper_tail(double x, double df);

/// n sum (ptilde - p0)^2 / p0 over the base support, df = r - 1. A positive
/// count on a zero-probability cell gives an infinite statistic and p = 0.
GofReport pearson_chisq(const EmpiricalCounts& data, const BaseMeasure& bm);

/// n sum_{j in J} LP_j^2 referred to chi2 with |J| degrees of freedom.
GofReport lp_gof(const EmpiricalCounts& data, const LPBasis& basis, Selection selection);
GofReport lp_gof(const EmpiricalCounts& data, const LPBasis& basis, std::span<const int> active);

/// Two-sided one-sample proportion Z-test; z equals sqrt(n) LP_1 of the binary basis.
GofReport proportion_ztest(std::int64_t successes, std::int64_t n, double p0);

/// sum theta_j LP_j - psi for a maxent model.
double relative_entropy(const SharpenedModel& model);
/// sum phat log(phat / p0), for cross-checking.
double direct_kl(const SharpenedModel& model);

/// A test statistic evaluated against a (possibly refitted) null.
using Statistic = std::function<double(const BaseMeasure& null, const EmpiricalCounts& sample)>;

Statistic pearson_statistic();
/// LPgof statistic with a basis of order min(max_order, r-1) and the given selection.
Statistic lpgof_statistic(int max_order, Selection selection);
/// LPgof statistic over fixed orders.
Statistic lpgof_statistic(std::vector<int> orders);
/// KL of the maxent model on the selected orders (0 when nothing is selected).
Statistic kl_statistic(int max_order, Selection selection);
Statistic kl_statistic(std::vector<int> orders);

struct BootstrapOptions {
  int B = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  /// Replicates whose statistic throws are skipped; more than this share is an error.
  double max_skip_fraction = 0.05;
};

/// Standard deviation of `stat` over B nonparametric resamples of `data`.
double bootstrap_se(const Statistic& stat, const BaseMeasure& bm, const EmpiricalCounts& data,
                    const BootstrapOptions& options);

/// p = (1 + #{T* >= T_obs}) / (B + 1) with T* on size-n samples from bm.
GofReport parametric_bootstrap_test(const Statistic& stat, const BaseMeasure& bm, const EmpiricalCounts& data,
                                    const BootstrapOptions& options);

/// Bootstrap test that refits the null parameters of `family` on every
/// sample. With B_inner > 0 the single-level p-value is calibrated by a
/// second bootstrap level; B_inner = 0 gives the single-level refit test.
/// Families without refittable parameters reduce to parametric_bootstrap_test.
GofReport double_bootstrap_test(const Statistic& stat, const ModelSpec& family, const EmpiricalCounts& data,
                                int B_inner, const BootstrapOptions& options);

}  // namespace lpds
