#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lpds/error.hpp"

namespace lpds {

enum class Family { poisson, neg_binomial, binomial, discrete_uniform, discretized_exponential, custom };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

/// How an infinite (or data-paired) support is cut down to a finite grid.
struct Truncation {
  enum class Mode {
    /// Extend until cumulative mass >= 1 - tail_tolerance; when paired with
    /// data also cover max observed + data_margin.
    tail,
    /// Restrict to [min observed, max observed].
    observed_range,
  };
  Mode mode = Mode::tail;
  double tail_tolerance = 1e-10;
  int data_margin = 5;
};

std::string_view to_string(Truncation::Mode mode);
Truncation::Mode truncation_mode_from_string(std::string_view name);

/// Parametric description of a null model. Only the fields of the chosen
/// family are read. `lower`/`upper` pin the support window once resolved,
/// so a spec echoed from a built measure rebuilds it exactly.
struct ModelSpec {
  Family family = Family::custom;

  double lambda = 0.0;  // poisson
  double mu = 0.0;      // neg_binomial mean
  double phi = 0.0;     // neg_binomial dispersion
  int trials = 0;       // binomial
  double prob = 0.0;    // binomial
  int k = 0;            // discrete_uniform on {1..k}
  double rate = 0.0;    // discretized_exponential
  std::vector<double> edges;
  std::vector<double> support;  // custom
  std::vector<double> weights;  // custom, unnormalized

  Truncation truncation;
  std::optional<double> lower;
  std::optional<double> upper;
};

ModelSpec poisson_spec(double lambda);
ModelSpec neg_binomial_spec(double mu, double phi);
ModelSpec binomial_spec(int trials, double prob);
ModelSpec discrete_uniform_spec(int k);
/// Exponential density with `rate`, integrated over `cells` equal-width bins on [lo, hi].
ModelSpec discretized_exponential_spec(double rate, double lo, double hi, int cells);
ModelSpec custom_spec(std::vector<double> support, std::vector<double> weights);

class EmpiricalCounts;

/// A finite null pmf p0 on an ordered grid together with F0, mid-F0 and Q0.
/// Immutable after construction.
class BaseMeasure {
 public:
  /// Normalizes `weights`; support must be strictly increasing.
  static BaseMeasure from_weights(std::vector<double> support, std::vector<double> weights, ModelSpec spec = {});

  std::size_t size() const { return support_.size(); }
  std::span<const double> support() const { return support_; }
  std::span<const double> pmf() const { return pmf_; }
  std::span<const double> cdf() const { return cdf_; }
  std::span<const double> mid_cdf() const { return mid_; }
  /// Bin edges (size()+1 entries) for binned measures, empty otherwise.
  std::span<const double> edges() const { return edges_; }
  const ModelSpec& spec() const { return spec_; }

  /// Mass removed by truncation before renormalization.
  double truncated_mass() const { return truncated_mass_; }

  std::optional<std::size_t> index_of(double x) const;
  /// F0(x) - p0(x)/2; throws if x is not a support point.
  double mid_cdf_at(double x) const;
  /// Smallest support index whose cdf is >= u, for u in (0, 1).
  std::size_t quantile_index(double u) const;
  double quantile(double u) const { return support_[quantile_index(u)]; }
  double mean() const;

 private:
  BaseMeasure() = default;

  std::vector<double> support_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::vector<double> mid_;
  std::vector<double> edges_;
  ModelSpec spec_;
  double truncated_mass_ = 0.0;

  friend BaseMeasure make_parametric(const ModelSpec&);
};

/// Builds the truncated, renormalized measure described by `spec`.
BaseMeasure make_parametric(const ModelSpec& spec);
/// As above, but the support window is resolved against the data
/// according to spec.truncation (unless spec pins lower/upper already).
BaseMeasure make_parametric(const ModelSpec& spec, const EmpiricalCounts& data);

/// Observed sample as sorted, deduplicated (value, count) pairs.
class EmpiricalCounts {
 public:
  static EmpiricalCounts from_samples(std::span<const double> samples);
  static EmpiricalCounts from_pairs(std::vector<std::pair<double, std::int64_t>> pairs);

  std::span<const double> values() const { return values_; }
  std::span<const std::int64_t> counts() const { return counts_; }
  std::int64_t n() const { return n_; }
  std::size_t size() const { return values_.size(); }
  double proportion(std::size_t i) const { return static_cast<double>(counts_[i]) / static_cast<double>(n_); }
  double min_value() const;
  double max_value() const;
  double mean() const;

 private:
  std::vector<double> values_;
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

/// Empirical pmf laid out on the measure's support. Throws when a value
/// with positive count is not a support point.
std::vector<double> empirical_on_support(const BaseMeasure& bm, const EmpiricalCounts& data);

/// Counts per support cell to EmpiricalCounts over the support values.
EmpiricalCounts counts_on_support(const BaseMeasure& bm, std::span<const std::int64_t> counts);

/// Re-estimates the family parameters of `proto` from data: Poisson and
/// binomial by moments, negative binomial by profile likelihood over phi
/// with mu fixed at the sample mean. Other families are returned unchanged.
ModelSpec fit_parameters(const ModelSpec& proto, const EmpiricalCounts& data);

bool is_refittable(Family family);

}  // namespace lpds
