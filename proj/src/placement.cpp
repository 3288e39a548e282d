#include "fluxctl/placement.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace fluxctl {

namespace {

constexpr int kMaxHalvings = 20;
constexpr double kMaxStepGrowth = 64.0;

}  // namespace

void GpgmConfig::validate() const {
  if (!(sigma > 0.0) || !(delta_star > 0.0) || !(epsilon > 0.0) ||
      !(fd_step > 0.0) || max_iters < 1 || starts < 1) {
    throw Error(ErrorCode::kInvalidInput,
                "GPGM settings must be positive (max_iters, starts >= 1)");
  }
}

MatrixXd project_sphere(const MatrixXd& B, double epsilon) {
  const double tr = B.squaredNorm();
  if (!(tr > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "cannot project a zero schematic");
  }
  return B * std::sqrt((static_cast<double>(B.cols()) + epsilon) / tr);
}

MatrixXd project_tangent(const MatrixXd& direction, const MatrixXd& B) {
  const double excess = B.squaredNorm() - static_cast<double>(B.cols());
  const MatrixXd g = 2.0 * excess * B;
  const double gg = g.squaredNorm();
  if (gg == 0.0) return direction;
  // (I - g g^+) v with g^+ = g^T / ||g||^2 for a single column.
  return direction - g * (g.cwiseProduct(direction).sum() / gg);
}

PlacementResult place_mean_optimal(const LinearSystem& system,
                                   const VectorXd& v, double t_star, int m) {
  if (m < 1) {
    throw Error(ErrorCode::kInvalidInput, "controller count m must be >= 1");
  }
  const FluxMatrix flux = flux_matrix(system, v, t_star);
  MatrixXd B(system.n(), m);
  for (int j = 0; j < m; ++j) B.col(j) = flux.top_vector;
  PlacementResult out{InputSchematic::normalized(B, 0.0), 0.0, 0, false, {}, {}};
  out.energy = 1.0 / (m * flux.lambda_max);
  out.converged = true;
  out.energy_trace = {out.energy};
  return out;
}

ConstrainedEnergy::ConstrainedEnergy(const LinearSystem& system,
                                     const VectorXd& x0, double t_star,
                                     MomentGoal goal)
    : system_(system), t_star_(t_star), goal_(std::move(goal)) {
  if (x0.size() != system.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "initial state length must equal system dimension");
  }
  z_ = expm_scaled(system, t_star) * x0;
  binding_ = binding_check(goal_, z_);
}

StateSelection ConstrainedEnergy::select(const MatrixXd& B) const {
  const GramianBundle bundle =
      reachability_gramian(system_, InputSchematic(B), t_star_);
  return select_state(bundle, z_, goal_);
}

double ConstrainedEnergy::operator()(const MatrixXd& B) const {
  return select(B).energy;
}

PlacementResult gpgm(const LinearSystem& system, const VectorXd& x0,
                     double t_star, const MomentGoal& goal, int m,
                     const GpgmConfig& config, const MatrixXd& B_init) {
  config.validate();
  if (B_init.rows() != system.n() || B_init.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "B_init must be n x m");
  }
  const ConstrainedEnergy objective(system, x0, t_star, goal);
  const double radius = m + config.epsilon;

  MatrixXd B = project_sphere(B_init, config.epsilon);
  double energy = objective(B);
  PlacementResult out{InputSchematic::normalized(B, config.epsilon), 0.0, 0, false,
                      {}, {}};
  out.energy = energy;
  out.energy_trace.push_back(energy);
  if (!objective.binding() || energy <= 0.0) {
    out.converged = true;
    return out;
  }

  // Descent runs on log E, whose gradient grad E / E does not depend on the
  // scale of the goal threshold.
  auto log_energy = [&](const MatrixXd& X) { return std::log(objective(X)); };

  double step = config.sigma;
  MatrixXd grad(B.rows(), B.cols());
  for (int iter = 0; iter < config.max_iters; ++iter) {
    try {
      for (int j = 0; j < B.cols(); ++j) {
        for (int i = 0; i < B.rows(); ++i) {
          const double h = config.fd_step * (1.0 + std::abs(B(i, j)));
          MatrixXd plus = B;
          MatrixXd minus = B;
          plus(i, j) += h;
          minus(i, j) -= h;
          grad(i, j) = (log_energy(plus) - log_energy(minus)) / (2.0 * h);
        }
      }
    } catch (const Error& e) {
      out.diagnostic = std::string("gradient evaluation failed: ") + e.what();
      break;
    }
    const MatrixXd direction = project_tangent(grad, B);
    if (direction.squaredNorm() == 0.0) {
      out.converged = true;
      break;
    }

    bool accepted = false;
    std::string last_failure;
    MatrixXd candidate;
    double candidate_energy = 0.0;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      candidate = project_sphere(B - step * direction, config.epsilon);
      try {
        candidate_energy = objective(candidate);
        last_failure.clear();
        if (candidate_energy <= energy) {
          accepted = true;
          break;
        }
      } catch (const Error& e) {
        last_failure = e.what();
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (last_failure.empty()) {
        out.converged = true;
      } else {
        out.diagnostic = "state selection failed after " +
                         std::to_string(kMaxHalvings) +
                         " step halvings: " + last_failure;
      }
      break;
    }

    const double delta = B.cwiseProduct(candidate).sum() / radius;
    B = candidate;
    energy = candidate_energy;
    out.energy_trace.push_back(energy);
    ++out.iterations;
    step = std::min(2.0 * step, kMaxStepGrowth * config.sigma);
    if (1.0 - delta < config.delta_star) {
      out.converged = true;
      break;
    }
  }

  out.B_star = InputSchematic::normalized(B, config.epsilon);
  out.energy = energy;
  return out;
}

PlacementResult gpgm_multistart(const LinearSystem& system,
                                const VectorXd& x0, double t_star,
                                const MomentGoal& goal, int m,
                                const GpgmConfig& config) {
  config.validate();
  std::optional<PlacementResult> best;
  for (int k = 0; k < config.starts; ++k) {
    const InputSchematic start =
        ram_baseline(system.n(), m, config.seed + k, config.epsilon);
    PlacementResult run = gpgm(system, x0, t_star, goal, m, config, start.B());
    if (!best || run.energy < best->energy) best = std::move(run);
  }
  return *best;
}

InputSchematic ram_baseline(int n, int m, std::uint64_t seed,
                            double epsilon) {
  if (n < 1 || m < 1) {
    throw Error(ErrorCode::kInvalidInput, "RAM needs n, m >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd B(n, m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) B(i, j) = unit(rng);
  }
  return InputSchematic::normalized(B, epsilon);
}

DriverSelection pgme_driver_select(const MatrixXd& B_star, int k) {
  const int n = static_cast<int>(B_star.rows());
  const int m = static_cast<int>(B_star.cols());
  if (k < 1 || k > m || k > n) {
    throw Error(ErrorCode::kInvalidInput,
                "driver count k must satisfy 1 <= k <= min(m, n)");
  }
  std::vector<bool> taken(n, false);
  std::vector<int> nodes;
  MatrixXd S = MatrixXd::Zero(n, k);
  for (int j = 0; j < k; ++j) {
    int best = -1;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      if (best < 0 || std::abs(B_star(i, j)) > std::abs(B_star(best, j))) {
        best = i;
      }
    }
    taken[best] = true;
    nodes.push_back(best);
    S(best, j) = 1.0;
  }
  return DriverSelection{std::move(nodes), InputSchematic(std::move(S))};
}

}  // namespace fluxctl
