#pragma once

#include <variant>
#include <vector>

#include "fluxctl/gramian.hpp"

namespace fluxctl {

/// v^T x >= c. The mean constraint (1/n) sum x_i >= eta is v = 1,
/// c = n * eta.
struct LinearGoal {
  VectorXd v;
  double c = 0.0;
};

enum class Sense { kExpand, kContract };

/// ||O x - d||^2 >= eta (expand) or <= eta (contract).
struct RepulsionGoal {
  MatrixXd O;
  VectorXd d;
  double eta = 0.0;
  Sense sense = Sense::kExpand;
};

/// ||D x||^2 >= eta with D the centering matrix.
struct VarianceGoal {
  double eta = 0.0;
};

using MomentGoal = std::variant<LinearGoal, RepulsionGoal, VarianceGoal>;

LinearGoal mean_goal(int n, double eta);

/// Statistic the goal constrains, evaluated at x (v^T x, ||Ox-d||^2 or
/// ||Dx||^2), and the threshold it is compared against.
double goal_statistic(const MomentGoal& goal, const VectorXd& x);
double goal_threshold(const MomentGoal& goal);

struct StateSelection {
  VectorXd x_star;
  double multiplier = 0.0;
  double energy = 0.0;
  bool binding = false;
};

/// I - 1 1^T / n
MatrixXd centering_matrix(int n);

/// True iff the autonomous terminal state z violates the goal.
bool binding_check(const MomentGoal& goal, const VectorXd& z);

/// Closed form x* = z - (alpha / kappa) W v, alpha = v^T z - c. Works for
/// singular W as long as kappa = v^T W v > 0.
StateSelection select_mean_state(const GramianBundle& bundle,
                                 const VectorXd& z, const LinearGoal& goal);

/// Push the terminal state a distance sqrt(eta) away from z along the
/// leading eigenvector of W. Energy eta / lambda_max(W).
StateSelection select_repulsion_state(const GramianBundle& bundle,
                                      const VectorXd& z, double eta);

/// Minimum energy state on the ellipsoid ||O x - d||^2 = eta, located at
/// the secular-equation root closest to zero on the side fixed by `sense`,
/// or at the boundary eigenvector solution when no interior root exists.
StateSelection solve_qcls(const GramianBundle& bundle, const VectorXd& z,
                          const MatrixXd& O, const VectorXd& d, double eta,
                          Sense sense);

/// Secular function f(lambda) = ||O x(lambda) - d||^2 with x(lambda) from
/// the normal equations (W^-1 - lambda O^T O) x = W^-1 z - lambda O^T d.
double qcls_secular(const GramianBundle& bundle, const VectorXd& z,
                    const MatrixXd& O, const VectorXd& d, double lambda);

/// Smallest positive generalized eigenvalue of (W^-1, O^T O); the pole of
/// the secular function.
double qcls_pole(const GramianBundle& bundle, const MatrixXd& O);

StateSelection select_variance_state(const GramianBundle& bundle,
                                     const VectorXd& z, double eta);

struct VarianceSpectrum {
  double lambda_min_plus = 0.0;
  VectorXd omega;  // generalized eigenvector, unit norm
};

/// Smallest nonnegative generalized eigenvalue of (W^-1, D), computed on
/// the mean-zero subspace where D is invertible.
VarianceSpectrum variance_spectrum(const GramianBundle& bundle);

/// (||D z|| + sqrt(eta))^2 * lambda_min^+
double variance_energy_bound(const GramianBundle& bundle, const VectorXd& z,
                             double eta);

/// ||d||_2^2 - ||d||_inf^2: thresholds at or above this are reachable from
/// one controller.
double repulsion_min_threshold(const VectorXd& d);

/// The single-controller construction B = sqrt(c) e_k with k the largest
/// |d_k|: scalings b with ||b B - d||^2 = eta exist iff the discriminant
/// (B^T d)^2 - c (d^T d - eta) is nonnegative.
struct SingleInputReach {
  int k = 0;
  double discriminant = 0.0;
  bool feasible = false;
  std::vector<double> scalings;
};

SingleInputReach single_input_repulsion(const VectorXd& d, double eta,
                                        double c = 1.0);

/// (z - x)^T W^+ (z - x) with a spectral cutoff relative to lambda_max.
double transfer_energy(const GramianBundle& bundle, const VectorXd& z,
                       const VectorXd& x, double cutoff = 1e-10);

/// Dispatches to the solver matching the goal variant.
StateSelection select_state(const GramianBundle& bundle, const VectorXd& z,
                            const MomentGoal& goal);

}  // namespace fluxctl
