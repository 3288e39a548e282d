#pragma once

#include <functional>
#include <vector>

#include "fluxctl/gramian.hpp"

namespace fluxctl {

struct Trajectory {
  std::vector<double> times;
  std::vector<VectorXd> states;
  std::vector<VectorXd> inputs;
  std::vector<double> cumulative_energy;
};

using InputSignal = std::function<VectorXd(double)>;

/// Open-loop minimum-energy input u(t) = B^T e^{A^T (t* - t)} W^+ (x* - z)
/// with z = e^{t* A} x0. W^+ keeps eigenvalues above 1e-10 lambda_max(W).
/// Throws kUnreachableState when x* - z has a component outside range(W)
/// larger than 1e-6 (1 + ||x* - z||).
class MinEnergyController {
 public:
  MinEnergyController(const LinearSystem& system,
                      const InputSchematic& schematic, const MatrixXd& W,
                      const VectorXd& x0, const VectorXd& x_star,
                      double t_star);

  VectorXd operator()(double t) const;

  /// (x* - z)^T W^+ (x* - z)
  double energy() const { return energy_; }
  double t_star() const { return t_star_; }

 private:
  MatrixXd At_;
  MatrixXd Bt_;
  VectorXd costate_;
  double t_star_;
  double energy_ = 0.0;
};

VectorXd min_energy_input(const LinearSystem& system,
                          const InputSchematic& schematic, const MatrixXd& W,
                          const VectorXd& x0, const VectorXd& x_star,
                          double t_star, double t);

/// Fixed-step RK4 on [0, t*] with `steps` (>= 2) intervals. The cumulative
/// energy integrates ||u||^2 with Simpson's rule on each step, reusing the
/// RK4 midpoint sample. Throws Divergence once the state is non-finite.
Trajectory simulate(const LinearSystem& system,
                    const InputSchematic& schematic,
                    const InputSignal& input_fn, const VectorXd& x0,
                    double t_star, int steps);

}  // namespace fluxctl
