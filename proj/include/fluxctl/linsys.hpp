#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

#include "fluxctl/error.hpp"

namespace fluxctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Linear time-invariant network dynamics xdot = A x + B u. Edge (i, j) of
/// the encoded graph exists iff A(i, j) != 0.
class LinearSystem {
 public:
  /// Throws kInvalidInput if A is empty, not square, or has non-finite
  /// entries.
  explicit LinearSystem(MatrixXd A, std::string label = {});

  int n() const { return static_cast<int>(A_.rows()); }
  const MatrixXd& A() const { return A_; }
  const std::string& label() const { return label_; }

  bool has_edge(int i, int j) const { return A_(i, j) != 0.0; }

 private:
  MatrixXd A_;
  std::string label_;
};

struct StateVector {
  VectorXd x;
  double t = 0.0;
};

/// n x m input matrix. When sphere-normalized, tr(B^T B) = m + epsilon.
class InputSchematic {
 public:
  explicit InputSchematic(MatrixXd B);

  /// Rescales B onto the sphere tr(B^T B) = m + epsilon.
  static InputSchematic normalized(const MatrixXd& B, double epsilon = 0.0);

  int n() const { return static_cast<int>(B_.rows()); }
  int m() const { return static_cast<int>(B_.cols()); }
  const MatrixXd& B() const { return B_; }

  bool sphere_normalized() const { return sphere_epsilon_.has_value(); }
  std::optional<double> sphere_epsilon() const { return sphere_epsilon_; }

 private:
  MatrixXd B_;
  std::optional<double> sphere_epsilon_;
};

struct ControllabilityReport {
  int kalman_rank = 0;
  bool controllable = false;
  bool pbh_ok = false;
  int min_drivers = 1;
};

/// e^{tA}.
MatrixXd expm_scaled(const LinearSystem& system, double t);
MatrixXd expm(const MatrixXd& M);

/// A = -(Delta - A_K) for a nonnegative symmetric adjacency with zero
/// diagonal.
LinearSystem laplacian_system(const MatrixXd& adjacency,
                              std::string label = {});

/// [B, AB, ..., A^{n-1} B]
MatrixXd controllability_matrix(const MatrixXd& A, const MatrixXd& B);

/// Numerical rank from singular values with cutoff rows * sigma_max * eps.
int numerical_rank(const MatrixXd& M);

/// Largest geometric multiplicity over the eigenvalues of A. This is the
/// minimum number of independent inputs that make (A, B) controllable.
int min_driver_count(const MatrixXd& A);

ControllabilityReport controllability_report(const LinearSystem& system,
                                             const InputSchematic& schematic);

/// True iff some column B_i has w^T B_i != 0; sufficient for the scalar
/// output w^T x to be steerable to any value.
bool output_controllable_sufficient(const VectorXd& weights,
                                    const InputSchematic& schematic);

}  // namespace fluxctl
