#include "fluxctl/centrality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fluxctl {

namespace {

VectorXd average_ranks(const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return x(a) < x(b); });
  const double scale = std::max(x.cwiseAbs().maxCoeff(), 1e-300);
  VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && x(order[j + 1]) - x(order[i]) <= 1e-12 * scale) ++j;
    const double avg = 0.5 * (i + j) + 1.0;
    for (int k = i; k <= j; ++k) ranks(order[k]) = avg;
    i = j + 1;
  }
  return ranks;
}

double quantile(std::vector<double> sorted, double q) {
  const double pos = q * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

}  // namespace

VectorXd flux_centrality(const LinearSystem& system, double t_star) {
  return flux_matrix(system, VectorXd::Ones(system.n()), t_star).top_vector;
}

FluxProfile flux_sweep(const LinearSystem& system,
                       const std::vector<double>& horizons) {
  if (horizons.empty()) {
    throw Error(ErrorCode::kInvalidInput, "flux sweep needs at least one horizon");
  }
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    if (!(horizons[h] > 0.0) || (h > 0 && horizons[h] < horizons[h - 1])) {
      throw Error(ErrorCode::kInvalidInput,
                  "horizons must be positive and sorted ascending");
    }
  }
  FluxProfile profile;
  profile.horizons = horizons;
  profile.phi.resize(static_cast<Eigen::Index>(horizons.size()), system.n());
  const VectorXd ones = VectorXd::Ones(system.n());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const FluxMatrix flux = flux_matrix(system, ones, horizons[h]);
    profile.phi.row(static_cast<Eigen::Index>(h)) = flux.top_vector.transpose();
    profile.lambda_max.push_back(flux.lambda_max);
  }
  return profile;
}

double spearman(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kInvalidInput,
                "spearman needs two vectors of equal length >= 2");
  }
  const VectorXd ra = average_ranks(a);
  const VectorXd rb = average_ranks(b);
  if (ra == rb) return 1.0;
  const VectorXd ca = ra.array() - ra.mean();
  const VectorXd cb = rb.array() - rb.mean();
  const double denom = ca.norm() * cb.norm();
  if (denom == 0.0) return 0.0;
  return ca.dot(cb) / denom;
}

Histogram freedman_diaconis(const VectorXd& values) {
  if (values.size() == 0) {
    throw Error(ErrorCode::kInvalidInput, "histogram of an empty sample");
  }
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  Histogram hist;
  hist.lo = sorted.front();
  const double range = sorted.back() - sorted.front();
  const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
  const double n = static_cast<double>(sorted.size());
  hist.width = iqr > 0.0 ? 2.0 * iqr / std::cbrt(n) : 0.0;
  int bins = 1;
  if (hist.width > 0.0 && range > 0.0) {
    bins = std::max(1, static_cast<int>(std::ceil(range / hist.width)));
  } else {
    hist.width = range > 0.0 ? range : 1.0;
  }
  hist.counts.assign(bins, 0);
  for (double v : sorted) {
    int k = static_cast<int>(std::floor((v - hist.lo) / hist.width));
    hist.counts[std::clamp(k, 0, bins - 1)]++;
  }
  return hist;
}

}  // namespace fluxctl
