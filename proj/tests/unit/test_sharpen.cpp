#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "lpds/rng.hpp"
#include "lpds/sharpen.hpp"

using namespace lpds;
using Catch::Approx;

namespace {

EmpiricalCounts counts_of(std::vector<std::pair<double, std::int64_t>> pairs) {
  return EmpiricalCounts::from_pairs(std::move(pairs));
}

double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

const std::vector<std::pair<double, std::int64_t>> kGambler = {{1, 4}, {2, 6}, {3, 17}, {4, 16}, {5, 8}, {6, 9}};

}  // namespace

TEST_CASE("Jaynes die: LP1 from a mean-4.5 sample", "[sharpen]") {
  auto basis = LPBasis::build(make_parametric(discrete_uniform_spec(6)), 5);
  auto lp = lp_coefficients(basis, counts_of({{4, 1}, {5, 1}}));
  CHECK(lp.at(1) == Approx(std::sqrt(12.0 / 35.0)).epsilon(1e-12));
  CHECK(lp.n == 2);
}

TEST_CASE("binary LP1 is the standardized proportion", "[sharpen]") {
  const double p0 = 0.3;
  auto basis = LPBasis::build(make_parametric(binomial_spec(1, p0)), 1);
  auto lp = lp_coefficients(basis, counts_of({{0, 13}, {1, 7}}));
  CHECK(lp.at(1) == Approx((0.35 - p0) / std::sqrt(p0 * (1 - p0))).epsilon(1e-13));
  CHECK(lp.z(1) == Approx(std::sqrt(20.0) * lp.at(1)));
  CHECK_THROWS_AS(lp.at(2), Error);
}

TEST_CASE("data equal to p0 has zero LP coefficients", "[sharpen]") {
  auto bm = make_parametric(binomial_spec(8, 0.4));
  auto basis = LPBasis::build(bm, 8);
  auto lp = lp_coefficients(basis, bm.pmf(), 1000);
  for (double v : lp.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("coefficients are bounded by the basis sup norm", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(2.0));
  auto basis = LPBasis::build(bm, 6);
  auto lp = lp_coefficients(basis, counts_of({{0, 3}, {5, 9}, {9, 1}}));
  for (int j = 1; j <= 6; ++j) CHECK(std::abs(lp.at(j)) <= basis.column(j).cwiseAbs().maxCoeff());
}

TEST_CASE("selection rules", "[sharpen]") {
  LPCoefficients c;
  c.orders = {1, 2, 3, 4};
  c.values = {0.05, -0.3, 0.11, 0.02};
  c.n = 400;  // threshold 0.1
  CHECK(select(c, Selection::threshold) == std::vector<int>{2, 3});
  CHECK(select(c, Selection::all) == std::vector<int>{1, 2, 3, 4});
  // AIC gains: .09 - .005, .0121 - .005, .0025 - .005 -> stop after two.
  CHECK(select(c, Selection::aic) == std::vector<int>{2, 3});
  c.values = {0.01, 0.01, 0.01, 0.01};
  CHECK(select(c, Selection::aic).empty());
  CHECK(select(c, Selection::threshold).empty());
  CHECK(selection_from_string("aic") == Selection::aic);
  CHECK_THROWS(selection_from_string("bic"));
}

TEST_CASE("sparse dice selects the first two orders", "[sharpen]") {
  std::vector<double> support, weights;
  for (int x = 1; x <= 20; ++x) {
    support.push_back(x);
    weights.push_back(x <= 2 ? 9.0 : 1.0);
  }
  auto basis = LPBasis::build(make_parametric(custom_spec(support, weights)), 19);
  auto lp = lp_coefficients(basis, counts_of({{1, 15}, {2, 5}}));
  CHECK(select(lp, Selection::threshold) == std::vector<int>{1, 2});
}

TEST_CASE("empty active set reproduces p0", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(1.3));
  auto basis = LPBasis::build(bm, 4);
  auto lp = lp_coefficients(basis, counts_of({{0, 2}, {3, 4}}));
  auto f = ds_fourier(basis, lp, {});
  auto m = maxent_fit(basis, lp, {});
  for (std::size_t i = 0; i < bm.size(); ++i) {
    CHECK(f.pmf()[i] == bm.pmf()[i]);
    CHECK(m.pmf()[i] == Approx(bm.pmf()[i]).epsilon(1e-14));
  }
  CHECK(f.comparison_density(0.3) == 1.0);
  CHECK(f.mean() == Approx(bm.mean()));
  CHECK(m.psi() == 0.0);
}

TEST_CASE("full-rank fourier model reproduces the empirical pmf", "[sharpen][property]") {
  Rng rng(7);
  for (int t = 0; t < 30; ++t) {
    const int r = 3 + static_cast<int>(rng.below(15));
    std::vector<double> x(r), w(r);
    std::vector<std::pair<double, std::int64_t>> pairs;
    for (int i = 0; i < r; ++i) {
      x[i] = i;
      w[i] = 0.05 + rng.uniform();
      pairs.emplace_back(i, static_cast<std::int64_t>(rng.below(30)));
    }
    pairs[0].second += 1;
    auto bm = BaseMeasure::from_weights(x, w);
    auto data = counts_of(pairs);
    auto basis = LPBasis::build(bm, r - 1);
    REQUIRE(basis.rank() == r - 1);
    auto lp = lp_coefficients(basis, data);
    auto model = ds_fourier(basis, lp, lp.orders);
    auto pt = empirical_on_support(bm, data);
    for (int i = 0; i < r; ++i) CHECK(std::abs(model.pmf()[i] - pt[i]) < 1e-10);
    CHECK(std::abs(sum(model.pmf()) - 1) < 1e-10);
    // d - 1 = sum LP_j T_j, pointwise
    for (int i = 0; i < r; ++i) {
      double s = 0;
      for (int j : lp.orders) s += lp.at(j) * basis.value(j, i);
      CHECK(std::abs(model.pmf()[i] / bm.pmf()[i] - 1 - s) < 1e-10);
    }
  }
}

TEST_CASE("negative fourier models are flagged and not sampled", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(1.0));
  auto basis = LPBasis::build(bm, 3);
  LPCoefficients c{{1, 2, 3}, {-0.9, 0.0, 0.0}, 100};
  auto model = ds_fourier(basis, c, std::vector<int>{1});
  CHECK(model.negative());
  CHECK(std::abs(sum(model.pmf()) - 1) < 1e-10);
  CHECK_THROWS_AS(model.sample(10, 1), Error);
}

TEST_CASE("gambler die fourier density is raised on faces 3 and 4", "[sharpen]") {
  auto bm = make_parametric(discrete_uniform_spec(6));
  auto basis = LPBasis::build(bm, 5);
  auto lp = lp_coefficients(basis, counts_of(kGambler));
  auto model = ds_fourier(basis, lp, lp.orders);
  CHECK(model.comparison_density(0.42) > 1.0);
  CHECK(model.comparison_density(0.58) > 1.0);
  CHECK(model.comparison_density(0.1) < 1.0);
  CHECK(model.comparison_density_at(2) == Approx(17.0 / 60 * 6));
}

TEST_CASE("comparison density integrates to one", "[sharpen][property]") {
  Rng rng(99);
  auto bm = make_parametric(neg_binomial_spec(6, 2.5));
  auto basis = LPBasis::build(bm, 6);
  for (int t = 0; t < 20; ++t) {
    auto counts = draw_counts(bm.cdf(), 40 + static_cast<std::int64_t>(rng.below(300)), rng);
    auto lp = lp_coefficients(basis, counts_on_support(bm, counts));
    for (Form form : {Form::fourier, Form::maxent}) {
      auto active = select(lp, Selection::all);
      auto model = form == Form::fourier ? ds_fourier(basis, lp, active) : maxent_fit(basis, lp, active);
      auto curve = model.curve();
      double integral = 0;
      for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        integral += (curve[i + 1].first - curve[i].first) * curve[i].second;
      CHECK(std::abs(integral - 1) < 1e-10);
      CHECK(curve.front().first == 0.0);
      CHECK(curve.back().first == 1.0);
      CHECK(curve.size() == bm.size() + 1);
    }
  }
}

TEST_CASE("Jaynes maxent solution", "[sharpen]") {
  auto basis = LPBasis::build(make_parametric(discrete_uniform_spec(6)), 1);
  std::vector<int> active = {1};
  std::vector<double> target = {std::sqrt(12.0 / 35.0)};
  auto model = maxent_fit(basis, active, target);
  CHECK(model.coef()[0] == Approx(0.634).margin(0.005));
  CHECK(model.psi() == Approx(0.193).margin(0.005));
  std::vector<double> expect = {0.054, 0.079, 0.114, 0.165, 0.240, 0.347};
  for (int i = 0; i < 6; ++i) CHECK(model.pmf()[i] == Approx(expect[i]).margin(0.001));
  CHECK(model.mean() == Approx(4.5).epsilon(1e-10));
  CHECK(model.gradient_norm() < 1e-10);

  auto f = ds_fourier(basis, LPCoefficients{{1}, target, 2}, active);
  CHECK(f.mean() == Approx(4.5).epsilon(1e-12));
}

TEST_CASE("maxent with zero targets is the null", "[sharpen]") {
  auto basis = LPBasis::build(make_parametric(poisson_spec(4.0)), 4);
  std::vector<int> active = {1, 2, 3};
  std::vector<double> zeros(3, 0.0);
  auto model = maxent_fit(basis, active, zeros);
  for (double t : model.coef()) CHECK(t == 0.0);
  CHECK(std::abs(model.psi()) < 1e-15);
}

TEST_CASE("maxent duality at random attainable targets", "[sharpen][property]") {
  Rng rng(5150);
  auto bm = make_parametric(binomial_spec(10, 0.4));
  auto basis = LPBasis::build(bm, 5);
  for (int t = 0; t < 25; ++t) {
    // targets generated from a known exponential tilt are attainable by construction
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(3);
    for (int j = 0; j < 3; ++j) theta[j] = rng.uniform() - 0.5;
    std::vector<double> w(bm.size());
    for (std::size_t i = 0; i < bm.size(); ++i)
      w[i] = bm.pmf()[i] * std::exp(theta[0] * basis.value(1, i) + theta[1] * basis.value(2, i) +
                                    theta[2] * basis.value(4, i));
    double z = sum(w);
    std::vector<int> active = {1, 2, 4};
    std::vector<double> target(3, 0.0);
    for (std::size_t i = 0; i < bm.size(); ++i)
      for (int k = 0; k < 3; ++k) target[k] += w[i] / z * basis.value(active[k], i);
    auto model = maxent_fit(basis, active, target);
    for (int k = 0; k < 3; ++k) CHECK(model.coef()[k] == Approx(theta[k]).margin(1e-8));
    for (int k = 0; k < 3; ++k) {
      double m = 0;
      for (std::size_t i = 0; i < bm.size(); ++i) m += model.pmf()[i] * basis.value(active[k], i);
      CHECK(std::abs(m - target[k]) < 1e-9);
    }
    for (double p : model.pmf()) CHECK(p > 0.0);
    CHECK(std::abs(sum(model.pmf()) - 1) < 1e-10);
  }
}

TEST_CASE("maxent rejects unattainable targets", "[sharpen]") {
  auto basis = LPBasis::build(make_parametric(discrete_uniform_spec(6)), 1);
  std::vector<int> active = {1};
  std::vector<double> beyond = {basis.value(1, 5) + 0.1};
  CHECK_THROWS_AS(maxent_fit(basis, active, beyond), Error);
}

TEST_CASE("one-term fourier mean update", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(1.0));
  auto basis = LPBasis::build(bm, 2);
  LPCoefficients c{{1, 2}, {0.130, 0.0}, 500};
  auto model = ds_fourier(basis, c, std::vector<int>{1});
  CHECK(model.mean() == Approx(bm.mean() + 0.130 * basis.quantile_inner_product(1)).epsilon(1e-12));
  CHECK(model.mean() == Approx(1.125).margin(0.001));
}

TEST_CASE("sampling is reproducible and unbiased", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(1.0));
  auto basis = LPBasis::build(bm, 2);
  auto model = ds_fourier(basis, LPCoefficients{{1, 2}, {0, 0}, 1}, {});
  auto a = model.sample(20000, 42);
  auto b = model.sample(20000, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.counts()[i] == b.counts()[i]);
  CHECK(std::abs(a.mean() - 1.0) < 3.0 / std::sqrt(20000.0));
  CHECK(model.cdf().back() == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("cover_data extends a parametric base", "[sharpen]") {
  auto bm = make_parametric(poisson_spec(1.0));
  auto far = counts_of({{0, 1}, {60, 1}});
  auto covered = cover_data(bm, far);
  CHECK(covered.index_of(60.0).has_value());
  auto die = make_parametric(custom_spec({1, 2, 3}, {1, 1, 1}));
  CHECK_THROWS_AS(cover_data(die, counts_of({{4, 1}})), Error);
}

TEST_CASE("LP z-scores under the null are standard", "[sharpen][slow]") {
  auto bm = make_parametric(poisson_spec(3.0));
  auto basis = LPBasis::build(bm, 4);
  const int B = 2000;
  const std::int64_t n = 2000;
  std::vector<double> s1(4, 0.0), s2(4, 0.0);
  Rng root(31337);
  for (int b = 0; b < B; ++b) {
    Rng rng = root.child(static_cast<std::uint64_t>(b));
    auto counts = draw_counts(bm.cdf(), n, rng);
    std::vector<double> pt(bm.size());
    for (std::size_t i = 0; i < bm.size(); ++i) pt[i] = static_cast<double>(counts[i]) / n;
    auto lp = lp_coefficients(basis, pt, n);
    for (int j = 1; j <= 4; ++j) {
      s1[j - 1] += lp.z(j);
      s2[j - 1] += lp.z(j) * lp.z(j);
    }
  }
  for (int j = 0; j < 4; ++j) {
    double mean = s1[j] / B, var = s2[j] / B - mean * mean;
    CHECK(std::abs(mean) < 0.1);
    CHECK(std::abs(var - 1) < 0.15);
  }
}
