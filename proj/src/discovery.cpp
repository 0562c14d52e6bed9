#include "lpds/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "lpds/lp_basis.hpp"
#include "lpds/parallel.hpp"
#include "lpds/rng.hpp"
#include "lpds/sharpen.hpp"

namespace lpds {

std::string_view to_string(TailMode m) {
  switch (m) {
    case TailMode::automatic: return "automatic";
    case TailMode::gaussian: return "gaussian";
    case TailMode::empirical: return "empirical";
  }
  return "automatic";
}

TailMode tail_mode_from_string(std::string_view name) {
  for (auto m : {TailMode::automatic, TailMode::gaussian, TailMode::empirical})
    if (to_string(m) == name) return m;
  throw Error("unknown tail mode '" + std::string(name) + "'");
}

double sigma_tail(double sigma) {
  const boost::math::normal_distribution<> z;
  return boost::math::cdf(boost::math::complement(z, sigma));
}

namespace {

// Threshold-selected Fourier comparison density on every support cell.
void fourier_curve(const LPBasis& basis, std::span<const double> ptilde, std::int64_t n, std::vector<double>& d,
                   std::vector<int>* active = nullptr) {
  const LPCoefficients c = lp_coefficients(basis, ptilde, n);
  const std::vector<int> J = select(c, Selection::threshold);
  d.assign(basis.base().size(), 1.0);
  for (int j : J) {
    const double lp = c.at(j);
    const auto col = basis.values().col(j - 1);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += lp * col[static_cast<Eigen::Index>(i)];
  }
  if (active) *active = J;
}

}  // namespace

BumpScanResult bump_scan(const BaseMeasure& bm, const EmpiricalCounts& data, const BumpScanOptions& o) {
  if (o.B < 1) throw Error("bump scan needs B >= 1");
  if (!(o.sigma > 0.0)) throw Error("bump scan needs sigma > 0");
  const double alpha = sigma_tail(o.sigma);
  const double floor_p = 1.0 / (o.B + 1.0);

  BumpScanResult res;
  res.B = o.B;
  res.threshold = -std::log10(alpha);
  switch (o.tail) {
    case TailMode::empirical:
      if (floor_p > alpha) {
        std::ostringstream os;
        os << "B = " << o.B << " cannot resolve a " << o.sigma << " sigma tail (needs B > " << std::ceil(1.0 / alpha)
           << "); enable the Gaussian tail approximation";
        throw Error(os.str());
      }
      break;
    case TailMode::gaussian: res.gaussian_tail = true; break;
    case TailMode::automatic: res.gaussian_tail = floor_p > alpha; break;
  }

  const LPBasis basis = LPBasis::build(bm, std::min<int>(o.max_order, static_cast<int>(bm.size()) - 1));
  const std::size_t r = bm.size();
  std::vector<double> d_obs;
  fourier_curve(basis, empirical_on_support(bm, data), data.n(), d_obs, &res.active);

  // Per-cell exceedance counts and running moments over the null curves,
  // reduced in replicate order so results do not depend on threading.
  std::vector<std::vector<double>> curves(static_cast<std::size_t>(o.B));
  const Rng root(o.seed);
  const auto cdf = bm.cdf();
  const double n = static_cast<double>(data.n());
  parallel_for(
      curves.size(),
      [&](std::size_t b) {
        Rng rng = root.child(b);
        const auto counts = draw_counts(cdf, data.n(), rng);
        std::vector<double> p(r);
        for (std::size_t i = 0; i < r; ++i) p[i] = static_cast<double>(counts[i]) / n;
        fourier_curve(basis, p, data.n(), curves[b]);
      },
      o.threads);

  std::vector<double> hits(r, 0.0), mean(r, 0.0), m2(r, 0.0);
  for (std::size_t b = 0; b < curves.size(); ++b) {
    const auto& c = curves[b];
    for (std::size_t i = 0; i < r; ++i) {
      if (c[i] >= d_obs[i] - 1e-12) hits[i] += 1.0;
      const double delta = c[i] - mean[i];
      mean[i] += delta / static_cast<double>(b + 1);
      m2[i] += delta * (c[i] - mean[i]);
    }
  }

  const boost::math::normal_distribution<> z;
  for (std::size_t i = 0; i < r; ++i) {
    const double x = bm.support()[i];
    if (o.window_lo && x < *o.window_lo) continue;
    if (o.window_hi && x > *o.window_hi) continue;
    double p = (1.0 + hits[i]) / (o.B + 1.0);
    const double sd = o.B > 1 ? std::sqrt(m2[i] / (o.B - 1.0)) : 0.0;
    if (res.gaussian_tail && sd > 0.0) p = boost::math::cdf(boost::math::complement(z, (d_obs[i] - mean[i]) / sd));
    res.grid.push_back(x);
    res.d_hat.push_back(d_obs[i]);
    res.pval.push_back(p);
    res.neglog10.push_back(p > 0.0 ? -std::log10(p) : std::numeric_limits<double>::infinity());
    res.in_region.push_back(res.neglog10.back() >= res.threshold);
  }

  const auto edges = bm.edges();
  auto left = [&](std::size_t g) {
    if (edges.empty()) return res.grid[g];
    return edges[*bm.index_of(res.grid[g])];
  };
  auto right = [&](std::size_t g) {
    if (edges.empty()) return res.grid[g];
    return edges[*bm.index_of(res.grid[g]) + 1];
  };
  for (std::size_t g = 0; g < res.grid.size();) {
    if (!res.in_region[g]) {
      ++g;
      continue;
    }
    std::size_t e = g;
    while (e + 1 < res.grid.size() && res.in_region[e + 1]) ++e;
    res.regions.push_back({left(g), right(e)});
    g = e + 1;
  }
  return res;
}

Eigen::MatrixXd lp_transform_matrix(const std::vector<EmpiricalCounts>& sources, const BaseMeasure& bm, int m) {
  if (sources.empty()) throw Error("no sources given");
  const LPBasis basis = LPBasis::build(bm, m);
  if (basis.rank() < m) throw Error("the base supports only " + std::to_string(basis.rank()) + " LP orders");
  Eigen::MatrixXd L(static_cast<Eigen::Index>(sources.size()), m);
  for (std::size_t l = 0; l < sources.size(); ++l) {
    const LPCoefficients c = lp_coefficients(basis, sources[l]);
    for (int j = 1; j <= m; ++j) L(static_cast<Eigen::Index>(l), j - 1) = c.at(j);
  }
  return L;
}

DssResult dss_embed(const Eigen::MatrixXd& L) {
  if (L.rows() < 2 || L.cols() < 2) throw Error("DSS needs at least 2 sources and 2 LP orders");
  DssResult res;
  res.L = L;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeThinU | Eigen::ComputeThinV);
  res.singular_values = svd.singularValues();
  res.U = svd.matrixU();
  res.V = svd.matrixV();
  for (Eigen::Index k = 0; k < res.U.cols(); ++k) {
    Eigen::Index at = 0;
    res.U.col(k).cwiseAbs().maxCoeff(&at);
    if (res.U(at, k) < 0.0) {
      res.U.col(k) *= -1.0;
      res.V.col(k) *= -1.0;
    }
  }
  res.coords = Eigen::MatrixXd::Zero(L.rows(), 2);
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(2, res.U.cols()); ++k)
    res.coords.col(k) = res.singular_values[k] * res.U.col(k);
  res.discovery_index = res.coords.rowwise().squaredNorm();
  return res;
}

}  // namespace lpds
