#include "fluxctl/gramian.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace fluxctl {

namespace {

// Van Loan is applied on t*/2^k with ||A||_1 h below this bound, so the
// anti-stable diagonal block stays O(1) and no precision is lost in the
// off-diagonal product.
constexpr double kSubIntervalNorm = 0.5;
// Eigenvalues within this relative distance of lambda_max share the top
// eigenspace.
constexpr double kTopClusterTol = 1e-10;

void check_horizon(double t_star) {
  if (!(t_star > 0.0) || !std::isfinite(t_star)) {
    throw Error(ErrorCode::kInvalidInput, "horizon t* must be positive");
  }
}

}  // namespace

SymmetricEigen symmetric_eigen_descending(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidInput, "symmetric eigen-solve failed");
  }
  SymmetricEigen out;
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  return out;
}

VectorXd leading_eigenvector(const SymmetricEigen& eig,
                             const VectorXd& reference) {
  const int n = static_cast<int>(eig.values.size());
  const double top = eig.values(0);
  const double scale = std::max(std::abs(top), 1e-300);
  int dim = 1;
  while (dim < n && top - eig.values(dim) <= kTopClusterTol * scale) ++dim;

  VectorXd v;
  if (dim == 1) {
    v = eig.vectors.col(0);
  } else {
    const MatrixXd basis = eig.vectors.leftCols(dim);
    v = basis * (basis.transpose() * reference);
    if (v.norm() <= 1e-12 * std::max(1.0, reference.norm())) {
      // Reference orthogonal to the eigenspace: project e_0, e_1, ... in
      // turn and keep the first nonzero projection.
      for (int k = 0; k < n; ++k) {
        v = basis * basis.row(k).transpose();
        if (v.norm() > 1e-8) break;
      }
    }
    v.normalize();
  }

  const double dot = reference.dot(v);
  if (std::abs(dot) > 1e-12 * std::max(1.0, reference.norm())) {
    if (dot < 0.0) v = -v;
  } else {
    Eigen::Index k = 0;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0.0) v = -v;
  }
  return v;
}

MatrixXd integrated_gramian(const MatrixXd& A, const MatrixXd& S,
                            double t_star) {
  check_horizon(t_star);
  const int n = static_cast<int>(A.rows());
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int doublings = 0;
  double h = t_star;
  while (norm1 * h > kSubIntervalNorm && doublings < 60) {
    h *= 0.5;
    ++doublings;
  }

  MatrixXd block = MatrixXd::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = -A * h;
  block.topRightCorner(n, n) = S * h;
  block.bottomRightCorner(n, n) = A.transpose() * h;
  const MatrixXd F = block.exp();
  // F22 = e^{A^T h}, W(h) = F22^T F12.
  MatrixXd W = F.bottomRightCorner(n, n).transpose() * F.topRightCorner(n, n);
  MatrixXd step = F.bottomRightCorner(n, n).transpose();  // e^{A h}

  for (int i = 0; i < doublings; ++i) {
    W += step * W * step.transpose();
    W = 0.5 * (W + W.transpose()).eval();
    step = step * step;
  }
  return 0.5 * (W + W.transpose());
}

GramianBundle make_bundle(MatrixXd W, double t_star) {
  GramianBundle bundle;
  bundle.W = std::move(W);
  bundle.t_star = t_star;
  bundle.kappa = bundle.W.sum();
  bundle.eig = symmetric_eigen_descending(bundle.W);
  return bundle;
}

GramianBundle reachability_gramian(const LinearSystem& system,
                                   const InputSchematic& schematic,
                                   double t_star) {
  if (schematic.n() != system.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input matrix rows must equal system dimension");
  }
  const MatrixXd& B = schematic.B();
  return make_bundle(
      integrated_gramian(system.A(), B * B.transpose(), t_star), t_star);
}

FluxMatrix flux_matrix(const LinearSystem& system, const VectorXd& v,
                       double t_star) {
  if (v.size() != system.n()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight vector length must equal system dimension");
  }
  if (v.norm() == 0.0) {
    throw Error(ErrorCode::kInvalidInput, "flux weight vector must be nonzero");
  }
  FluxMatrix flux;
  flux.Phi = integrated_gramian(system.A().transpose(), v * v.transpose(),
                                t_star);
  flux.v = v;
  flux.t_star = t_star;
  const SymmetricEigen eig = symmetric_eigen_descending(flux.Phi);
  flux.lambda_max = eig.values(0);
  flux.top_vector = leading_eigenvector(eig, VectorXd::Ones(system.n()));
  return flux;
}

MatrixXd gramian_quadrature(const LinearSystem& system,
                            const InputSchematic& schematic, double t_star,
                            int steps) {
  check_horizon(t_star);
  if (steps < 2 || steps % 2 != 0) {
    throw Error(ErrorCode::kInvalidInput,
                "Simpson quadrature needs an even step count >= 2");
  }
  const MatrixXd& B = schematic.B();
  const MatrixXd S = B * B.transpose();
  const double h = t_star / steps;
  MatrixXd sum = MatrixXd::Zero(system.n(), system.n());
  for (int k = 0; k <= steps; ++k) {
    const double weight = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const MatrixXd E = expm_scaled(system, k * h);
    sum += weight * (E * S * E.transpose());
  }
  sum *= h / 3.0;
  return 0.5 * (sum + sum.transpose());
}

double kappa(const GramianBundle& bundle, const VectorXd& v) {
  if (v.size() != bundle.W.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight vector length must equal Gramian dimension");
  }
  return v.dot(bundle.W * v);
}

}  // namespace fluxctl
