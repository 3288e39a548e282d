#pragma once

#include <vector>

#include "fluxctl/gramian.hpp"

namespace fluxctl {

/// Flux centrality per horizon: row h is the unit top eigenvector of
/// Phi_1(horizons[h]), oriented to a nonnegative entry sum.
struct FluxProfile {
  std::vector<double> horizons;
  MatrixXd phi;  // horizons x nodes
  std::vector<double> lambda_max;
};

VectorXd flux_centrality(const LinearSystem& system, double t_star);

FluxProfile flux_sweep(const LinearSystem& system,
                       const std::vector<double>& horizons);

/// Spearman rank correlation with average ranks for ties (values within
/// 1e-12 relative count as tied). Identical rank vectors give exactly 1.
double spearman(const VectorXd& a, const VectorXd& b);

struct Histogram {
  double lo = 0.0;
  double width = 0.0;
  std::vector<int> counts;
};

/// Freedman-Diaconis binning: width 2 IQR / n^{1/3}. Falls back to a single
/// bin when the IQR vanishes.
Histogram freedman_diaconis(const VectorXd& values);

}  // namespace fluxctl
