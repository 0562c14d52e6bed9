#include "lpds/base_measure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace lpds {

namespace {

constexpr std::size_t kMaxSupport = 50'000'000;

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

double log_poisson(double x, double lambda) { return x * std::log(lambda) - lambda - std::lgamma(x + 1.0); }

double log_neg_binomial(double x, double mu, double phi) {
  return std::lgamma(x + phi) - std::lgamma(phi) - std::lgamma(x + 1.0) + x * std::log(mu / (mu + phi)) +
         phi * std::log(phi / (mu + phi));
}

double log_binomial(double x, int trials, double prob) {
  const double t = trials;
  return std::lgamma(t + 1.0) - std::lgamma(x + 1.0) - std::lgamma(t - x + 1.0) + x * std::log(prob) +
         (t - x) * std::log1p(-prob);
}

void validate(const ModelSpec& s) {
  auto bad = [&](const std::string& what) {
    throw Error("invalid " + std::string(to_string(s.family)) + " parameters: " + what);
  };
  if (!(s.truncation.tail_tolerance > 0.0 && s.truncation.tail_tolerance < 1.0)) bad("tail tolerance must be in (0,1)");
  switch (s.family) {
    case Family::poisson:
      if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) bad("lambda must be > 0");
      break;
    case Family::neg_binomial:
      if (!(s.mu > 0.0) || !std::isfinite(s.mu)) bad("mu must be > 0");
      if (!(s.phi > 0.0) || !std::isfinite(s.phi)) bad("phi must be > 0");
      break;
    case Family::binomial:
      if (s.trials < 1) bad("trials must be >= 1");
      if (!(s.prob > 0.0 && s.prob < 1.0)) bad("prob must be in (0,1)");
      break;
    case Family::discrete_uniform:
      if (s.k < 2) bad("k must be >= 2");
      break;
    case Family::discretized_exponential:
      if (!(s.rate > 0.0) || !std::isfinite(s.rate)) bad("rate must be > 0");
      if (s.edges.size() < 3) bad("need at least two cells");
      for (std::size_t i = 1; i < s.edges.size(); ++i)
        if (!(s.edges[i] > s.edges[i - 1])) bad("edges must be strictly increasing");
      break;
    case Family::custom:
      if (s.support.size() != s.weights.size()) bad("support and weights differ in length");
      if (s.support.empty()) bad("empty support");
      for (double w : s.weights)
        if (!(w >= 0.0) || !std::isfinite(w)) bad("weights must be nonnegative");
      for (std::size_t i = 1; i < s.support.size(); ++i)
        if (!(s.support[i] > s.support[i - 1])) bad("support must be strictly increasing");
      break;
  }
}

struct RawMeasure {
  std::vector<double> support;
  std::vector<double> weights;  // already probabilities for the untruncated family
  std::vector<double> edges;
};

// Integer families with unbounded support: walk x = 0, 1, ... until the
// cumulative mass reaches 1 - tol and x reaches `at_least`.
template <class LogPmf>
RawMeasure unbounded_integer(LogPmf log_pmf, double tol, double at_least) {
  RawMeasure raw;
  double cum = 0.0;
  for (std::size_t x = 0;; ++x) {
    const double p = std::exp(log_pmf(static_cast<double>(x)));
    raw.support.push_back(static_cast<double>(x));
    raw.weights.push_back(p);
    cum += p;
    if (cum >= 1.0 - tol && static_cast<double>(x) >= at_least) break;
    if (x > kMaxSupport) throw Error("support truncation did not converge");
  }
  return raw;
}

RawMeasure raw_measure(const ModelSpec& s) {
  const double at_least = s.upper.value_or(0.0);
  const double tol = s.truncation.tail_tolerance;
  RawMeasure raw;
  switch (s.family) {
    case Family::poisson:
      return unbounded_integer([&](double x) { return log_poisson(x, s.lambda); }, tol, at_least);
    case Family::neg_binomial:
      return unbounded_integer([&](double x) { return log_neg_binomial(x, s.mu, s.phi); }, tol, at_least);
    case Family::binomial:
      for (int x = 0; x <= s.trials; ++x) {
        raw.support.push_back(x);
        raw.weights.push_back(std::exp(log_binomial(x, s.trials, s.prob)));
      }
      return raw;
    case Family::discrete_uniform:
      for (int x = 1; x <= s.k; ++x) {
        raw.support.push_back(x);
        raw.weights.push_back(1.0 / s.k);
      }
      return raw;
    case Family::discretized_exponential: {
      // Cell integrals of rate*exp(-rate*x), each relative to the left window edge.
      const double x0 = s.edges.front();
      for (std::size_t i = 0; i + 1 < s.edges.size(); ++i) {
        const double a = s.edges[i] - x0, b = s.edges[i + 1] - x0;
        raw.support.push_back(0.5 * (s.edges[i] + s.edges[i + 1]));
        raw.weights.push_back(std::exp(-s.rate * a) * -std::expm1(-s.rate * (b - a)));
      }
      raw.edges = s.edges;
      return raw;
    }
    case Family::custom:
      raw.support = s.support;
      raw.weights = s.weights;
      return raw;
  }
  throw Error("unknown family");
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::poisson: return "poisson";
    case Family::neg_binomial: return "neg_binomial";
    case Family::binomial: return "binomial";
    case Family::discrete_uniform: return "discrete_uniform";
    case Family::discretized_exponential: return "discretized_exponential";
    case Family::custom: return "custom";
  }
  return "custom";
}

Family family_from_string(std::string_view name) {
  for (auto f : {Family::poisson, Family::neg_binomial, Family::binomial, Family::discrete_uniform,
                 Family::discretized_exponential, Family::custom})
    if (to_string(f) == name) return f;
  throw Error("unknown family '" + std::string(name) + "'");
}

std::string_view to_string(Truncation::Mode mode) {
  return mode == Truncation::Mode::tail ? "tail" : "observed_range";
}

Truncation::Mode truncation_mode_from_string(std::string_view name) {
  if (name == "tail") return Truncation::Mode::tail;
  if (name == "observed_range") return Truncation::Mode::observed_range;
  throw Error("unknown truncation mode '" + std::string(name) + "'");
}

ModelSpec poisson_spec(double lambda) {
  ModelSpec s;
  s.family = Family::poisson;
  s.lambda = lambda;
  return s;
}

ModelSpec neg_binomial_spec(double mu, double phi) {
  ModelSpec s;
  s.family = Family::neg_binomial;
  s.mu = mu;
  s.phi = phi;
  return s;
}

ModelSpec binomial_spec(int trials, double prob) {
  ModelSpec s;
  s.family = Family::binomial;
  s.trials = trials;
  s.prob = prob;
  return s;
}

ModelSpec discrete_uniform_spec(int k) {
  ModelSpec s;
  s.family = Family::discrete_uniform;
  s.k = k;
  return s;
}

ModelSpec discretized_exponential_spec(double rate, double lo, double hi, int cells) {
  if (cells < 2 || !(hi > lo)) throw Error("discretized_exponential: need cells >= 2 and hi > lo");
  ModelSpec s;
  s.family = Family::discretized_exponential;
  s.rate = rate;
  s.edges.resize(static_cast<std::size_t>(cells) + 1);
  for (int i = 0; i <= cells; ++i) s.edges[i] = lo + (hi - lo) * i / cells;
  return s;
}

ModelSpec custom_spec(std::vector<double> support, std::vector<double> weights) {
  ModelSpec s;
  s.family = Family::custom;
  s.support = std::move(support);
  s.weights = std::move(weights);
  return s;
}

BaseMeasure BaseMeasure::from_weights(std::vector<double> support, std::vector<double> weights, ModelSpec spec) {
  if (support.size() != weights.size()) throw Error("support and weights differ in length");
  if (support.size() < 2) throw Error("a base measure needs at least 2 support points");
  for (std::size_t i = 1; i < support.size(); ++i)
    if (!(support[i] > support[i - 1])) throw Error("support must be strictly increasing");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("weights sum to zero");

  BaseMeasure bm;
  bm.support_ = std::move(support);
  bm.pmf_ = std::move(weights);
  for (double& p : bm.pmf_) p /= total;
  bm.cdf_.resize(bm.pmf_.size());
  bm.mid_.resize(bm.pmf_.size());
  double cum = 0.0;
  for (std::size_t i = 0; i < bm.pmf_.size(); ++i) {
    cum += bm.pmf_[i];
    bm.cdf_[i] = cum;
  }
  // Pin the last value; the partial sums are exact to a few ulps otherwise.
  bm.cdf_.back() = 1.0;
  for (std::size_t i = 0; i < bm.pmf_.size(); ++i) bm.mid_[i] = bm.cdf_[i] - 0.5 * bm.pmf_[i];
  if (std::count_if(bm.pmf_.begin(), bm.pmf_.end(), [](double p) { return p > 0.0; }) < 2)
    throw Error("degenerate measure: fewer than 2 points carry mass");
  bm.spec_ = std::move(spec);
  return bm;
}

BaseMeasure make_parametric(const ModelSpec& spec) {
  validate(spec);
  RawMeasure raw = raw_measure(spec);

  const bool unbounded = spec.family == Family::poisson || spec.family == Family::neg_binomial;
  // For unbounded families in tail mode `upper` only extends the walk.
  const bool cut_upper = !(unbounded && spec.truncation.mode == Truncation::Mode::tail);
  std::size_t first = 0, last = raw.support.size();
  if (spec.lower) first = std::lower_bound(raw.support.begin(), raw.support.end(), *spec.lower - 1e-9) - raw.support.begin();
  if (spec.upper && cut_upper)
    last = std::upper_bound(raw.support.begin(), raw.support.end(), *spec.upper + 1e-9) - raw.support.begin();
  if (last <= first || last - first < 2) throw Error("truncation leaves fewer than 2 support points");

  const double full = std::accumulate(raw.weights.begin(), raw.weights.end(), 0.0);
  std::vector<double> support(raw.support.begin() + first, raw.support.begin() + last);
  std::vector<double> weights(raw.weights.begin() + first, raw.weights.begin() + last);
  const double kept = std::accumulate(weights.begin(), weights.end(), 0.0);

  ModelSpec resolved = spec;
  if (unbounded) {
    resolved.upper = support.back();
    if (spec.lower) resolved.lower = support.front();
  }

  BaseMeasure bm = BaseMeasure::from_weights(std::move(support), std::move(weights), resolved);
  // Mass lost relative to the untruncated family (1 for infinite families).
  const double reference = unbounded ? 1.0 : full;
  bm.truncated_mass_ = std::max(0.0, reference - kept);
  if (!raw.edges.empty()) bm.edges_.assign(raw.edges.begin() + first, raw.edges.begin() + last + 1);
  return bm;
}

BaseMeasure make_parametric(const ModelSpec& spec, const EmpiricalCounts& data) {
  ModelSpec s = spec;
  if (s.truncation.mode == Truncation::Mode::observed_range) {
    if (!s.lower && !s.upper) {
      s.lower = data.min_value();
      s.upper = data.max_value();
    }
  } else if (s.family == Family::poisson || s.family == Family::neg_binomial) {
    // Pinned windows are widened, never narrowed, so observed values stay covered.
    s.upper = std::max(s.upper.value_or(0.0), data.max_value() + s.truncation.data_margin);
  }
  return make_parametric(s);
}

std::optional<std::size_t> BaseMeasure::index_of(double x) const {
  auto it = std::lower_bound(support_.begin(), support_.end(), x - 1e-9 * std::max(1.0, std::abs(x)));
  if (it == support_.end() || std::abs(*it - x) > 1e-9 * std::max(1.0, std::abs(x))) return std::nullopt;
  return static_cast<std::size_t>(it - support_.begin());
}

double BaseMeasure::mid_cdf_at(double x) const {
  auto i = index_of(x);
  if (!i) throw Error("value " + fmt_double(x) + " is not a support point");
  return mid_[*i];
}

std::size_t BaseMeasure::quantile_index(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw Error("quantile level must lie in (0,1)");
  auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<std::size_t>(it - cdf_.begin());
}

double BaseMeasure::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m += support_[i] * pmf_[i];
  return m;
}

EmpiricalCounts EmpiricalCounts::from_samples(std::span<const double> samples) {
  std::vector<std::pair<double, std::int64_t>> pairs;
  pairs.reserve(samples.size());
  for (double x : samples) pairs.emplace_back(x, 1);
  return from_pairs(std::move(pairs));
}

EmpiricalCounts EmpiricalCounts::from_pairs(std::vector<std::pair<double, std::int64_t>> pairs) {
  if (pairs.empty()) throw Error("empty sample");
  std::map<double, std::int64_t> merged;
  for (auto& [v, c] : pairs) {
    if (!std::isfinite(v)) throw Error("non-finite value in sample");
    if (c < 0) throw Error("negative count for value " + fmt_double(v));
    merged[v] += c;
  }
  EmpiricalCounts e;
  for (auto& [v, c] : merged) {
    e.values_.push_back(v);
    e.counts_.push_back(c);
    e.n_ += c;
  }
  if (e.n_ <= 0) throw Error("sample has no positive counts");
  return e;
}

double EmpiricalCounts::min_value() const {
  for (std::size_t i = 0; i < size(); ++i)
    if (counts_[i] > 0) return values_[i];
  return values_.front();
}

double EmpiricalCounts::max_value() const {
  for (std::size_t i = size(); i-- > 0;)
    if (counts_[i] > 0) return values_[i];
  return values_.back();
}

double EmpiricalCounts::mean() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += values_[i] * static_cast<double>(counts_[i]);
  return s / static_cast<double>(n_);
}

std::vector<double> empirical_on_support(const BaseMeasure& bm, const EmpiricalCounts& data) {
  std::vector<double> p(bm.size(), 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.counts()[i] == 0) continue;
    auto j = bm.index_of(data.values()[i]);
    if (!j) throw Error("observed value " + fmt_double(data.values()[i]) + " lies outside the base support");
    p[*j] += data.proportion(i);
  }
  return p;
}

EmpiricalCounts counts_on_support(const BaseMeasure& bm, std::span<const std::int64_t> counts) {
  if (counts.size() != bm.size()) throw Error("count vector does not match the support size");
  std::vector<std::pair<double, std::int64_t>> pairs;
  for (std::size_t i = 0; i < counts.size(); ++i)
    if (counts[i] > 0) pairs.emplace_back(bm.support()[i], counts[i]);
  return EmpiricalCounts::from_pairs(std::move(pairs));
}

bool is_refittable(Family family) {
  return family == Family::poisson || family == Family::binomial || family == Family::neg_binomial;
}

ModelSpec fit_parameters(const ModelSpec& proto, const EmpiricalCounts& data) {
  ModelSpec s = proto;
  s.lower.reset();
  s.upper.reset();
  const double mean = data.mean();
  switch (proto.family) {
    case Family::poisson:
      if (!(mean > 0.0)) throw Error("poisson fit: sample mean must be positive");
      s.lambda = mean;
      return s;
    case Family::binomial:
      if (proto.trials < 1) throw Error("binomial fit: number of trials is required");
      if (data.max_value() > proto.trials || data.min_value() < 0)
        throw Error("binomial fit: observations outside 0..trials");
      s.prob = mean / proto.trials;
      if (!(s.prob > 0.0 && s.prob < 1.0)) throw Error("binomial fit: estimated proportion on the boundary");
      return s;
    case Family::neg_binomial: {
      if (!(mean > 0.0)) throw Error("negative binomial fit: sample mean must be positive");
      auto nll = [&](double log_phi) {
        const double phi = std::exp(log_phi);
        double ll = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i)
          ll += static_cast<double>(data.counts()[i]) * log_neg_binomial(data.values()[i], mean, phi);
        return -ll;
      };
      auto [log_phi, value] = boost::math::tools::brent_find_minima(nll, std::log(1e-3), std::log(1e6), 52);
      (void)value;
      s.mu = mean;
      s.phi = std::exp(log_phi);
      return s;
    }
    default:
      return s;
  }
}

}  // namespace lpds
