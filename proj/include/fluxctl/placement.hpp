#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxctl/state_select.hpp"

namespace fluxctl {

struct GpgmConfig {
  double sigma = 1e-2;       // initial step size
  double delta_star = 1e-6;  // stop when 1 - delta < delta_star
  double epsilon = 1e-6;     // sphere radius is tr(B^T B) = m + epsilon
  int max_iters = 10000;
  double fd_step = 1e-6;     // relative central-difference step
  std::uint64_t seed = 0;
  int starts = 5;            // multi-start count

  void validate() const;
};

struct PlacementResult {
  InputSchematic B_star;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> energy_trace;
  std::string diagnostic;  // non-empty when GPGM aborted
};

/// Pi_s: rescale onto tr(B^T B) = m + epsilon.
MatrixXd project_sphere(const MatrixXd& B, double epsilon);

/// Pi_N: remove from `direction` its component along grad N(B)
/// = 2 (tr(B^T B) - m) B. Returned unchanged when grad N vanishes.
MatrixXd project_tangent(const MatrixXd& direction, const MatrixXd& B);

/// Every column is the top unit eigenvector of Phi_v, so tr(B^T B) = m and
/// kappa(B*) = m lambda_max(Phi_v). `energy` is the cost per unit alpha^2,
/// 1 / (m lambda_max).
PlacementResult place_mean_optimal(const LinearSystem& system,
                                   const VectorXd& v, double t_star, int m);

/// Minimum constrained-state energy reachable with schematic B: W(B), then
/// the goal's state selector. Throws whatever the selector throws.
class ConstrainedEnergy {
 public:
  ConstrainedEnergy(const LinearSystem& system, const VectorXd& x0,
                    double t_star, MomentGoal goal);

  double operator()(const MatrixXd& B) const;
  StateSelection select(const MatrixXd& B) const;

  const VectorXd& terminal_state() const { return z_; }
  bool binding() const { return binding_; }

 private:
  const LinearSystem& system_;
  double t_star_;
  MomentGoal goal_;
  VectorXd z_;
  bool binding_;
};

/// Generalized projected gradient descent on the sphere tr(B^T B) = m +
/// epsilon, nesting state selection in every objective evaluation.
PlacementResult gpgm(const LinearSystem& system, const VectorXd& x0,
                     double t_star, const MomentGoal& goal, int m,
                     const GpgmConfig& config, const MatrixXd& B_init);

/// Best of `config.starts` GPGM runs started from RAM schematics with seeds
/// config.seed, config.seed + 1, ...
PlacementResult gpgm_multistart(const LinearSystem& system,
                                const VectorXd& x0, double t_star,
                                const MomentGoal& goal, int m,
                                const GpgmConfig& config);

/// Uniform [0, 1) entries, then Pi_s. Deterministic per seed.
InputSchematic ram_baseline(int n, int m, std::uint64_t seed,
                            double epsilon = 1e-6);

struct DriverSelection {
  std::vector<int> nodes;  // 0-based row indices
  InputSchematic schematic;
};

/// Column by column (first k columns), the row with the largest |B_ij| not
/// already taken; ties go to the lowest index.
DriverSelection pgme_driver_select(const MatrixXd& B_star, int k);

}  // namespace fluxctl
