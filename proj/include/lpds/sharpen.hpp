#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "lpds/base_measure.hpp"
#include "lpds/lp_basis.hpp"

namespace lpds {

/// LP_j = sum_x ptilde(x) T_j(x) for every retained order of a basis.
struct LPCoefficients {
  std::vector<int> orders;
  std::vector<double> values;
  std::int64_t n = 0;

  double at(int j) const;
  double z(int j) const { return std::sqrt(static_cast<double>(n)) * at(j); }
  double sum_squares(std::span<const int> subset) const;
};

LPCoefficients lp_coefficients(const LPBasis& basis, const EmpiricalCounts& data);
/// From a pmf already laid out on the basis support; `n` is recorded as given.
LPCoefficients lp_coefficients(const LPBasis& basis, std::span<const double> ptilde, std::int64_t n);

enum class Selection { threshold, aic, all };
std::string_view to_string(Selection s);
Selection selection_from_string(std::string_view name);

/// threshold: |LP_j| > 2/sqrt(n). aic: orders of the m largest |LP_j| with m
/// maximizing (sum of their squares) - 2m/n. all: every retained order.
/// The result is sorted ascending.
std::vector<int> select(const LPCoefficients& coefs, Selection method);

/// Extends a parametric base so every observed value is a support point.
/// Returns `bm` unchanged when it already covers the data.
BaseMeasure cover_data(const BaseMeasure& bm, const EmpiricalCounts& data);

enum class Form { fourier, maxent };
std::string_view to_string(Form f);
Form form_from_string(std::string_view name);

struct MaxentOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-10;
  /// Divergence guard: |theta| beyond this means the targets are not attainable.
  double theta_limit = 1e3;
};

/// A density-sharpened model p0(x) d(F0(x)) on the base support.
class SharpenedModel {
 public:
  const LPBasis& basis() const { return basis_; }
  const BaseMeasure& base() const { return basis_.base(); }
  Form form() const { return form_; }
  std::span<const int> active() const { return active_; }
  /// LP_j (fourier) or theta_j (maxent), aligned with active().
  std::span<const double> coef() const { return coef_; }
  /// LP moments the model was fit to, aligned with active().
  std::span<const double> targets() const { return targets_; }
  double psi() const { return psi_; }
  bool negative() const { return negative_; }
  int iterations() const { return iterations_; }
  double gradient_norm() const { return gradient_norm_; }

  std::span<const double> pmf() const { return pmf_; }
  std::vector<double> cdf() const;
  double mean() const;

  /// d(u) at u in (0,1).
  double comparison_density(double u) const;
  /// d on the cell of support point i.
  double comparison_density_at(std::size_t i) const;
  /// (u, d(u)) at 0, at every interior cdf breakpoint, and at 1; each pair
  /// starts the constant segment to its right (the last pair closes the curve).
  std::vector<std::pair<double, double>> curve() const;

  /// n inverse-cdf draws; refused for fourier models with negative mass.
  EmpiricalCounts sample(std::int64_t n, std::uint64_t seed) const;

 private:
  explicit SharpenedModel(const LPBasis& basis) : basis_(basis) {}

  LPBasis basis_;
  Form form_ = Form::fourier;
  std::vector<int> active_;
  std::vector<double> coef_;
  std::vector<double> targets_;
  double psi_ = 0.0;
  bool negative_ = false;
  int iterations_ = 0;
  double gradient_norm_ = 0.0;
  std::vector<double> pmf_;

  friend SharpenedModel ds_fourier(const LPBasis&, const LPCoefficients&, std::span<const int>);
  friend SharpenedModel maxent_fit(const LPBasis&, std::span<const int>, std::span<const double>,
                                   const MaxentOptions&);
};

/// p0(x) [1 + sum_{j in active} LP_j T_j(x)].
SharpenedModel ds_fourier(const LPBasis& basis, const LPCoefficients& coefs, std::span<const int> active);

/// p0(x) exp(sum theta_j T_j(x) - psi) with E[T_j] = targets_j for j in active.
SharpenedModel maxent_fit(const LPBasis& basis, std::span<const int> active, std::span<const double> targets,
                          const MaxentOptions& options = {});
SharpenedModel maxent_fit(const LPBasis& basis, const LPCoefficients& coefs, std::span<const int> active,
                          const MaxentOptions& options = {});

}  // namespace lpds
