#include "fluxctl/trajectory.hpp"

#include <cmath>
#include <string>

namespace fluxctl {

namespace {

constexpr double kPinvCutoff = 1e-10;
constexpr double kRangeTolerance = 1e-6;

}  // namespace

MinEnergyController::MinEnergyController(const LinearSystem& system,
                                         const InputSchematic& schematic,
                                         const MatrixXd& W,
                                         const VectorXd& x0,
                                         const VectorXd& x_star,
                                         double t_star)
    : At_(system.A().transpose()),
      Bt_(schematic.B().transpose()),
      t_star_(t_star) {
  const int n = system.n();
  if (schematic.n() != n || W.rows() != n || W.cols() != n ||
      x0.size() != n || x_star.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "system, schematic, Gramian and states must share dimension n");
  }
  if (!(t_star > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "t_star must be positive");
  }
  const VectorXd displacement = x_star - expm_scaled(system, t_star) * x0;
  const SymmetricEigen eig = symmetric_eigen_descending(0.5 * (W + W.transpose()));
  const double cutoff = kPinvCutoff * std::max(eig.values(0), 0.0);

  costate_ = VectorXd::Zero(n);
  VectorXd projected = VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double lambda = eig.values(i);
    if (!(lambda > cutoff)) break;
    const double c = eig.vectors.col(i).dot(displacement);
    projected += c * eig.vectors.col(i);
    costate_ += (c / lambda) * eig.vectors.col(i);
    energy_ += c * c / lambda;
  }
  const double outside = (displacement - projected).norm();
  if (outside > kRangeTolerance * (1.0 + displacement.norm())) {
    throw Error(ErrorCode::kUnreachableState,
                "target displacement leaves range(W) by " +
                    std::to_string(outside));
  }
}

VectorXd MinEnergyController::operator()(double t) const {
  if (t < 0.0 || t > t_star_) {
    throw Error(ErrorCode::kInvalidInput, "input requested outside [0, t_star]");
  }
  return Bt_ * (expm(At_ * (t_star_ - t)) * costate_);
}

VectorXd min_energy_input(const LinearSystem& system,
                          const InputSchematic& schematic, const MatrixXd& W,
                          const VectorXd& x0, const VectorXd& x_star,
                          double t_star, double t) {
  return MinEnergyController(system, schematic, W, x0, x_star, t_star)(t);
}

Trajectory simulate(const LinearSystem& system,
                    const InputSchematic& schematic,
                    const InputSignal& input_fn, const VectorXd& x0,
                    double t_star, int steps) {
  if (steps < 2) {
    throw Error(ErrorCode::kInvalidInput, "simulate needs steps >= 2");
  }
  if (!(t_star > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "t_star must be positive");
  }
  if (schematic.n() != system.n() || x0.size() != system.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "schematic rows and x0 length must equal system dimension");
  }
  const MatrixXd& A = system.A();
  const MatrixXd& B = schematic.B();
  const double h = t_star / steps;

  auto input_at = [&](double t) {
    VectorXd u = input_fn(t);
    if (u.size() != schematic.m()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "input signal length must equal schematic columns");
    }
    return u;
  };

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.inputs.reserve(steps + 1);
  traj.cumulative_energy.reserve(steps + 1);

  VectorXd x = x0;
  VectorXd u = input_at(0.0);
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  traj.inputs.push_back(u);
  traj.cumulative_energy.push_back(0.0);

  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const double t_next = k + 1 == steps ? t_star : (k + 1) * h;
    const VectorXd u_mid = input_at(t + 0.5 * h);
    const VectorXd u_next = input_at(t_next);
    const VectorXd Bu = B * u;
    const VectorXd Bu_mid = B * u_mid;
    const VectorXd k1 = A * x + Bu;
    const VectorXd k2 = A * (x + 0.5 * h * k1) + Bu_mid;
    const VectorXd k3 = A * (x + 0.5 * h * k2) + Bu_mid;
    const VectorXd k4 = A * (x + h * k3) + B * u_next;
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite()) {
      throw Divergence("state became non-finite after t = " + std::to_string(t),
                       t);
    }
    const double step_energy =
        (h / 6.0) * (u.squaredNorm() + 4.0 * u_mid.squaredNorm() +
                     u_next.squaredNorm());
    traj.times.push_back(t_next);
    traj.states.push_back(x);
    traj.inputs.push_back(u_next);
    traj.cumulative_energy.push_back(traj.cumulative_energy.back() +
                                     step_energy);
    u = u_next;
  }
  return traj;
}

}  // namespace fluxctl
