#include "fluxctl/state_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace fluxctl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxRootIterations = 200;
// Singular values of O W^{1/2} at or below this fraction of the largest are
// treated as unreachable directions.
constexpr double kNullSingular = 1e-13;
constexpr double kTopClusterTol = 1e-10;
// A largest singular value below this fraction of ||O||_F ||W^{1/2}||_2 is
// rounding noise: the goal statistic cannot be moved at all.
constexpr double kNullScale = 1e-10;

void check_dims(const GramianBundle& bundle, const VectorXd& z) {
  if (z.size() != bundle.W.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "terminal state length must equal Gramian dimension");
  }
}

void check_eta(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) {
    throw Error(ErrorCode::kInvalidInput, "threshold eta must be >= 0");
  }
}

StateSelection corner(const VectorXd& z) {
  StateSelection s;
  s.x_star = z;
  s.binding = false;
  return s;
}

/// Square-root factor L with L L^T = W, numerically null eigenvalues
/// (<= n eps lambda_max) dropped.
MatrixXd sqrt_factor(const GramianBundle& bundle) {
  const auto& values = bundle.eig.values;
  const int n = static_cast<int>(values.size());
  const double cutoff = n * kEps * std::max(values(0), 0.0);
  VectorXd root(n);
  for (int i = 0; i < n; ++i) {
    root(i) = values(i) > cutoff ? std::sqrt(values(i)) : 0.0;
  }
  return bundle.eig.vectors * root.asDiagonal();
}

/// Residual terms r_i^2 / g_i(x)^2 with g_i = a_i + b_i x; the secular
/// function and its derivative in the normalized multiplier x.
struct SecularTerms {
  VectorXd r2;
  VectorXd a;
  VectorXd b;

  double value(double x) const {
    double f = 0.0;
    for (int i = 0; i < r2.size(); ++i) {
      const double g = a(i) + b(i) * x;
      f += r2(i) / (g * g);
    }
    return f;
  }

  double derivative(double x) const {
    double df = 0.0;
    for (int i = 0; i < r2.size(); ++i) {
      const double g = a(i) + b(i) * x;
      df -= 2.0 * r2(i) * b(i) / (g * g * g);
    }
    return df;
  }
};

/// Root of the decreasing function f(x) = eta on [lo, hi] with
/// f(lo) >= eta > f(hi). Newton on
/// 1/sqrt(f) - 1/sqrt(eta), which is close to linear near a pole,
/// safeguarded by bisection (geometric when the bracket spans decades).
double secular_root(const SecularTerms& terms, double eta, double lo,
                    double hi) {
  const double target = 1.0 / std::sqrt(eta);
  auto phi = [&](double x) { return 1.0 / std::sqrt(terms.value(x)) - target; };
  double x = (lo > 0.0 && hi > 0.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
  for (int it = 0; it < kMaxRootIterations; ++it) {
    const double f = terms.value(x);
    if (std::abs(f - eta) <= 1e-13 * (1.0 + eta)) return x;
    if (f >= eta) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::abs(hi - lo) <= 4.0 * kEps * std::max(std::abs(lo), std::abs(hi)))
      return x;
    const double dphi = -0.5 * std::pow(f, -1.5) * terms.derivative(x);
    double next = x - phi(x) / dphi;
    const double left = std::min(lo, hi);
    const double right = std::max(lo, hi);
    if (!(next > left && next < right) || !std::isfinite(next)) {
      const double pl = std::max(left, 0.0);
      next = (pl > 0.0 && right / pl > 4.0) ? std::sqrt(pl * right)
                                            : 0.5 * (left + right);
    }
    x = next;
  }
  return x;
}

/// Deterministic sign for a displacement direction: omega^T z >= 0, or a
/// positive largest-magnitude entry when omega is orthogonal to z.
void orient(VectorXd& omega, const VectorXd& z) {
  const double dot = omega.dot(z);
  if (std::abs(dot) > 1e-12 * omega.norm() * std::max(1.0, z.norm())) {
    if (dot < 0.0) omega = -omega;
    return;
  }
  Eigen::Index k = 0;
  omega.cwiseAbs().maxCoeff(&k);
  if (omega(k) < 0.0) omega = -omega;
}

/// Quadratic solve in coordinates x = z + L y, energy ||y||^2.
StateSelection solve_sqrt_coordinates(const MatrixXd& L, const VectorXd& z,
                                      const MatrixXd& O, const VectorXd& d,
                                      double eta, Sense sense) {
  const int n = static_cast<int>(z.size());
  const VectorXd r = d - O * z;
  const double f0 = r.squaredNorm();
  if (sense == Sense::kExpand ? !(f0 < eta) : !(f0 > eta)) return corner(z);

  const MatrixXd M = O * L;
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const VectorXd rt = svd.matrixU().transpose() * r;
  const double lnorm = L.size() > 0 ? L.colwise().norm().maxCoeff() : 0.0;
  const double noise = kNullScale * O.norm() * lnorm;
  const double smax = s.size() > 0 && s(0) > noise ? s(0) : 0.0;

  SecularTerms terms;
  terms.r2 = rt.cwiseAbs2();
  terms.a.resize(n);
  terms.b.resize(n);
  VectorXd rho = VectorXd::Zero(n);
  if (smax > 0.0) {
    for (int i = 0; i < s.size(); ++i) rho(i) = (s(i) / smax) * (s(i) / smax);
  }

  StateSelection out;
  out.binding = true;
  VectorXd yt = VectorXd::Zero(n);

  if (sense == Sense::kExpand) {
    if (smax <= 0.0) {
      throw Error(ErrorCode::kGoalUncontrollable,
                  "no reachable direction changes the constrained statistic");
    }
    // x = u in (0, 1]; multiplier psi = (1 - u) / smax^2, g_i = 1 - psi s_i^2.
    std::vector<int> top;
    double top_r2 = 0.0;
    double excl_at_pole = 0.0;
    for (int i = 0; i < n; ++i) {
      if (rho(i) >= 1.0 - kTopClusterTol) {
        top.push_back(i);
        terms.a(i) = 0.0;
        terms.b(i) = 1.0;
        top_r2 += terms.r2(i);
      } else {
        terms.a(i) = 1.0 - rho(i);
        terms.b(i) = rho(i);
        excl_at_pole += terms.r2(i) / (terms.a(i) * terms.a(i));
      }
    }
    bool hard = top_r2 <= 1e-26 * std::max(f0, 1e-300) && excl_at_pole < eta;
    double u = 0.0;
    if (!hard) {
      double lo = 1.0;
      while (lo > 1e-300 && terms.value(lo) < eta) lo *= 0.1;
      if (terms.value(lo) < eta) {
        hard = true;
      } else {
        u = secular_root(terms, eta, lo, 1.0);
      }
    }
    const double psi = (1.0 - u) / (smax * smax);
    for (int i = 0; i < n; ++i) {
      const double g = terms.a(i) + terms.b(i) * u;
      if (hard && rho(i) >= 1.0 - kTopClusterTol) continue;
      yt(i) = -psi * s(i) * rt(i) / g;
    }
    if (hard) {
      const int t = top.front();
      const double residual = std::max(eta - excl_at_pole, 0.0);
      yt(t) = std::sqrt(residual) / smax;
      VectorXd omega = L * svd.matrixV().col(t);
      VectorXd oriented = omega;
      orient(oriented, z);
      if (oriented.dot(omega) < 0.0) yt(t) = -yt(t);
    }
    out.multiplier = psi;
  } else {
    // x = kappa in [0, inf); mu = kappa / smax^2, g_i = 1 + mu s_i^2.
    double eta_min = 0.0;
    for (int i = 0; i < n; ++i) {
      terms.a(i) = 1.0;
      terms.b(i) = rho(i);
      if (smax <= 0.0 || s(i) <= kNullSingular * smax) eta_min += terms.r2(i);
    }
    const double tol = 1e-12 * (1.0 + eta);
    if (eta < eta_min - tol) {
      throw InfeasibleGoal("threshold below the smallest attainable value",
                           eta_min);
    }
    if (eta <= eta_min + tol) {
      for (int i = 0; i < n; ++i) {
        if (smax > 0.0 && s(i) > kNullSingular * smax) yt(i) = rt(i) / s(i);
      }
      out.multiplier = std::numeric_limits<double>::infinity();
    } else {
      double hi = 1.0;
      while (hi < 1e300 && terms.value(hi) > eta) hi *= 10.0;
      const double kappa = secular_root(terms, eta, 0.0, hi);
      const double mu = kappa / (smax * smax);
      for (int i = 0; i < n; ++i) {
        yt(i) = mu * s(i) * rt(i) / (1.0 + kappa * rho(i));
      }
      out.multiplier = mu;
    }
  }

  const VectorXd y = svd.matrixV() * yt;
  out.x_star = z + L * y;
  out.energy = yt.squaredNorm();
  return out;
}

bool is_identity(const MatrixXd& O) {
  return O.rows() == O.cols() &&
         (O - MatrixXd::Identity(O.rows(), O.cols())).cwiseAbs().maxCoeff() ==
             0.0;
}

}  // namespace

LinearGoal mean_goal(int n, double eta) {
  return LinearGoal{VectorXd::Ones(n), n * eta};
}

MatrixXd centering_matrix(int n) {
  return MatrixXd::Identity(n, n) - MatrixXd::Constant(n, n, 1.0 / n);
}

double goal_statistic(const MomentGoal& goal, const VectorXd& x) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, LinearGoal>) {
          return g.v.dot(x);
        } else if constexpr (std::is_same_v<T, RepulsionGoal>) {
          return (g.O * x - g.d).squaredNorm();
        } else {
          return (x.array() - x.mean()).matrix().squaredNorm();
        }
      },
      goal);
}

double goal_threshold(const MomentGoal& goal) {
  return std::visit(
      [](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, LinearGoal>) {
          return g.c;
        } else {
          return g.eta;
        }
      },
      goal);
}

bool binding_check(const MomentGoal& goal, const VectorXd& z) {
  const double stat = goal_statistic(goal, z);
  const double thr = goal_threshold(goal);
  if (const auto* rep = std::get_if<RepulsionGoal>(&goal)) {
    return rep->sense == Sense::kExpand ? stat < thr : stat > thr;
  }
  return stat < thr;
}

StateSelection select_mean_state(const GramianBundle& bundle,
                                 const VectorXd& z, const LinearGoal& goal) {
  check_dims(bundle, z);
  if (goal.v.size() != z.size() || goal.v.norm() == 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                "linear goal needs a nonzero weight vector of length n");
  }
  if (!binding_check(goal, z)) return corner(z);

  const VectorXd Wv = bundle.W * goal.v;
  const double k = goal.v.dot(Wv);
  const double scale = std::max(bundle.eig.values(0), 0.0) * goal.v.squaredNorm();
  if (!(k > 1e-12 * scale) || scale == 0.0) {
    throw Error(ErrorCode::kGoalUncontrollable,
                "v^T W v vanishes: the weighted output cannot be moved");
  }
  const double alpha = goal.v.dot(z) - goal.c;
  StateSelection out;
  out.x_star = z - (alpha / k) * Wv;
  out.multiplier = 2.0 * alpha / k;
  out.energy = alpha * alpha / k;
  out.binding = true;
  return out;
}

StateSelection select_repulsion_state(const GramianBundle& bundle,
                                      const VectorXd& z, double eta) {
  check_dims(bundle, z);
  check_eta(eta);
  if (eta == 0.0) return corner(z);
  const auto& values = bundle.eig.values;
  const int n = static_cast<int>(values.size());
  const double lmax = values(0);
  if (!(lmax > 0.0) || values(n - 1) <= n * kEps * lmax) {
    throw Error(ErrorCode::kRequiresControllability,
                "repulsion state selection needs a positive definite Gramian");
  }
  VectorXd omega = leading_eigenvector(bundle.eig, z);
  orient(omega, z);
  StateSelection out;
  out.x_star = z + std::sqrt(eta) * omega;
  out.multiplier = 1.0 / lmax;
  out.energy = eta / lmax;
  out.binding = true;
  return out;
}

StateSelection solve_qcls(const GramianBundle& bundle, const VectorXd& z,
                          const MatrixXd& O, const VectorXd& d, double eta,
                          Sense sense) {
  check_dims(bundle, z);
  check_eta(eta);
  if (O.rows() != z.size() || O.cols() != z.size() || d.size() != z.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "O must be n x n and d of length n");
  }
  if (sense == Sense::kExpand && is_identity(O) &&
      (d - z).cwiseAbs().maxCoeff() == 0.0) {
    return select_repulsion_state(bundle, z, eta);
  }
  return solve_sqrt_coordinates(sqrt_factor(bundle), z, O, d, eta, sense);
}

double qcls_secular(const GramianBundle& bundle, const VectorXd& z,
                    const MatrixXd& O, const VectorXd& d, double lambda) {
  check_dims(bundle, z);
  const MatrixXd M = O * sqrt_factor(bundle);
  Eigen::BDCSVD<MatrixXd> svd(M, Eigen::ComputeFullU);
  const VectorXd rt = svd.matrixU().transpose() * (d - O * z);
  const VectorXd& s = svd.singularValues();
  double f = 0.0;
  for (int i = 0; i < rt.size(); ++i) {
    const double si = i < s.size() ? s(i) : 0.0;
    const double g = 1.0 - lambda * si * si;
    f += rt(i) * rt(i) / (g * g);
  }
  return f;
}

double qcls_pole(const GramianBundle& bundle, const MatrixXd& O) {
  const MatrixXd M = O * sqrt_factor(bundle);
  Eigen::BDCSVD<MatrixXd> svd(M);
  const double smax = svd.singularValues()(0);
  if (!(smax > 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / (smax * smax);
}

VarianceSpectrum variance_spectrum(const GramianBundle& bundle) {
  const int n = static_cast<int>(bundle.W.rows());
  if (n < 2) {
    throw Error(ErrorCode::kVarianceUndefined,
                "variance needs at least two nodes");
  }
  // Columns 1..n-1 of the Householder Q for the ones vector span 1-perp.
  Eigen::HouseholderQR<MatrixXd> qr(MatrixXd::Ones(n, 1));
  const MatrixXd full = qr.householderQ() * MatrixXd::Identity(n, n);
  const MatrixXd Q = full.rightCols(n - 1);
  const SymmetricEigen reduced =
      symmetric_eigen_descending(Q.transpose() * bundle.W * Q);
  const double theta = reduced.values(0);
  if (!(theta > n * kEps * std::max(bundle.eig.values(0), 0.0))) {
    throw Error(ErrorCode::kRequiresControllability,
                "the Gramian does not reach the mean-zero subspace");
  }
  VarianceSpectrum out;
  out.lambda_min_plus = 1.0 / theta;
  out.omega = (bundle.W * (Q * reduced.vectors.col(0))).normalized();
  Eigen::Index k = 0;
  out.omega.cwiseAbs().maxCoeff(&k);
  if (out.omega(k) < 0.0) out.omega = -out.omega;
  return out;
}

StateSelection select_variance_state(const GramianBundle& bundle,
                                     const VectorXd& z, double eta) {
  check_dims(bundle, z);
  check_eta(eta);
  const int n = static_cast<int>(z.size());
  if (n < 2) {
    throw Error(ErrorCode::kVarianceUndefined,
                "variance needs at least two nodes");
  }
  if (!binding_check(VarianceGoal{eta}, z)) return corner(z);
  return solve_sqrt_coordinates(sqrt_factor(bundle), z, centering_matrix(n),
                                VectorXd::Zero(n), eta, Sense::kExpand);
}

double variance_energy_bound(const GramianBundle& bundle, const VectorXd& z,
                             double eta) {
  check_dims(bundle, z);
  check_eta(eta);
  const VarianceSpectrum spec = variance_spectrum(bundle);
  const double dz = (z.array() - z.mean()).matrix().norm();
  const double reach = dz + std::sqrt(eta);
  return reach * reach * spec.lambda_min_plus;
}

double repulsion_min_threshold(const VectorXd& d) {
  if (d.size() == 0) return 0.0;
  const double inf = d.cwiseAbs().maxCoeff();
  return std::max(d.squaredNorm() - inf * inf, 0.0);
}

SingleInputReach single_input_repulsion(const VectorXd& d, double eta,
                                        double c) {
  if (d.size() == 0 || !(c > 0.0)) {
    throw Error(ErrorCode::kInvalidInput,
                "single-input construction needs nonempty d and c > 0");
  }
  SingleInputReach out;
  Eigen::Index k = 0;
  d.cwiseAbs().maxCoeff(&k);
  out.k = static_cast<int>(k);
  const double btd = std::sqrt(c) * d(k);
  out.discriminant = btd * btd - c * (d.squaredNorm() - eta);
  const double tol = 1e-12 * c * (d.squaredNorm() + std::abs(eta));
  out.feasible = out.discriminant >= -tol;
  if (out.feasible) {
    const double root = std::sqrt(std::max(out.discriminant, 0.0));
    out.scalings = {(btd - root) / c, (btd + root) / c};
  }
  return out;
}

double transfer_energy(const GramianBundle& bundle, const VectorXd& z,
                       const VectorXd& x, double cutoff) {
  check_dims(bundle, z);
  const auto& values = bundle.eig.values;
  const VectorXd delta = bundle.eig.vectors.transpose() * (z - x);
  const double floor = cutoff * std::max(values(0), 0.0);
  double e = 0.0;
  for (int i = 0; i < values.size(); ++i) {
    if (values(i) > floor) e += delta(i) * delta(i) / values(i);
  }
  return e;
}

StateSelection select_state(const GramianBundle& bundle, const VectorXd& z,
                            const MomentGoal& goal) {
  return std::visit(
      [&](const auto& g) -> StateSelection {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, LinearGoal>) {
          return select_mean_state(bundle, z, g);
        } else if constexpr (std::is_same_v<T, RepulsionGoal>) {
          return solve_qcls(bundle, z, g.O, g.d, g.eta, g.sense);
        } else {
          return select_variance_state(bundle, z, g.eta);
        }
      },
      goal);
}

}  // namespace fluxctl
