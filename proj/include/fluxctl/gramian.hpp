#pragma once

#include "fluxctl/linsys.hpp"

namespace fluxctl {

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted in
/// descending order (column i of vectors pairs with values(i)).
struct SymmetricEigen {
  VectorXd values;
  MatrixXd vectors;
};

SymmetricEigen symmetric_eigen_descending(const MatrixXd& S);

/// Unit vector spanning the direction of S's top eigenspace that best
/// aligns with `reference`. When the eigenspace is one-dimensional this is
/// just the top eigenvector. Sign is fixed so reference^T v >= 0, falling
/// back to a positive largest-magnitude entry (lowest index) when the
/// product vanishes.
VectorXd leading_eigenvector(const SymmetricEigen& eig,
                             const VectorXd& reference);

struct GramianBundle {
  MatrixXd W;
  double t_star = 0.0;
  double kappa = 0.0;  // 1^T W 1
  SymmetricEigen eig;
};

struct FluxMatrix {
  MatrixXd Phi;
  VectorXd v;
  double t_star = 0.0;
  double lambda_max = 0.0;
  VectorXd top_vector;
};

/// int_0^t e^{sA} S e^{sA^T} ds for symmetric S, via the Van Loan block
/// exponential on a short sub-interval followed by exact horizon doubling.
MatrixXd integrated_gramian(const MatrixXd& A, const MatrixXd& S,
                            double t_star);

/// W(B; A, t*) = int_0^{t*} e^{tA} B B^T e^{tA^T} dt, symmetrized.
GramianBundle reachability_gramian(const LinearSystem& system,
                                   const InputSchematic& schematic,
                                   double t_star);

/// Builds a bundle around an already computed Gramian.
GramianBundle make_bundle(MatrixXd W, double t_star);

/// Phi_v = int_0^{t*} e^{tA^T} v v^T e^{tA} dt, i.e. the reachability
/// Gramian of the pair (A^T, v).
FluxMatrix flux_matrix(const LinearSystem& system, const VectorXd& v,
                       double t_star);

/// Composite Simpson rule for W with `steps` (even, >= 2) sub-intervals,
/// exponentiating at every node. Slow; meant as an independent check.
MatrixXd gramian_quadrature(const LinearSystem& system,
                            const InputSchematic& schematic, double t_star,
                            int steps);

/// v^T W v
double kappa(const GramianBundle& bundle, const VectorXd& v);

}  // namespace fluxctl
