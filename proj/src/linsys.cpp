#include "fluxctl/linsys.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace fluxctl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Eigenvalues closer than this (relative to max(1,|lambda|)) are one cluster.
constexpr double kEigenClusterTol = 1e-8;

void require_finite(const MatrixXd& M, const char* what) {
  if (!M.allFinite()) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(what) + " has non-finite entries");
  }
}

using Eigen::MatrixXcd;
using Complex = std::complex<double>;

std::vector<Complex> clustered_eigenvalues(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kInvalidInput, "eigenvalue iteration failed");
  }
  std::vector<Complex> raw(es.eigenvalues().data(),
                           es.eigenvalues().data() + es.eigenvalues().size());
  std::vector<Complex> centers;
  std::vector<int> counts;
  for (const Complex& lam : raw) {
    bool merged = false;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double scale = std::max(1.0, std::abs(centers[c]));
      if (std::abs(lam - centers[c]) <= kEigenClusterTol * scale) {
        centers[c] = (centers[c] * static_cast<double>(counts[c]) + lam) /
                     static_cast<double>(counts[c] + 1);
        ++counts[c];
        merged = true;
        break;
      }
    }
    if (!merged) {
      centers.push_back(lam);
      counts.push_back(1);
    }
  }
  return centers;
}

int complex_rank(const MatrixXcd& M, double tol_scale) {
  Eigen::JacobiSVD<MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  const double tol = kEigenClusterTol * std::max(1.0, tol_scale);
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++r;
  }
  return r;
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid_input";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kGoalUncontrollable: return "goal_uncontrollable";
    case ErrorCode::kRequiresControllability: return "requires_controllability";
    case ErrorCode::kInfeasibleGoal: return "infeasible_goal";
    case ErrorCode::kVarianceUndefined: return "variance_undefined";
    case ErrorCode::kUnreachableState: return "unreachable_state";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kParse: return "parse_error";
  }
  return "unknown";
}

LinearSystem::LinearSystem(MatrixXd A, std::string label)
    : A_(std::move(A)), label_(std::move(label)) {
  if (A_.rows() == 0 || A_.rows() != A_.cols()) {
    throw Error(ErrorCode::kInvalidInput,
                "dynamics matrix must be square and non-empty");
  }
  require_finite(A_, "dynamics matrix");
}

InputSchematic::InputSchematic(MatrixXd B) : B_(std::move(B)) {
  if (B_.rows() == 0 || B_.cols() == 0) {
    throw Error(ErrorCode::kInvalidInput, "input matrix must have m >= 1");
  }
  require_finite(B_, "input matrix");
}

InputSchematic InputSchematic::normalized(const MatrixXd& B, double epsilon) {
  InputSchematic out(B);
  const double tr = B.squaredNorm();
  if (tr <= 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                "cannot normalize a zero input matrix");
  }
  const double target = static_cast<double>(B.cols()) + epsilon;
  out.B_ *= std::sqrt(target / tr);
  out.sphere_epsilon_ = epsilon;
  return out;
}

MatrixXd expm(const MatrixXd& M) {
  require_finite(M, "matrix");
  return M.exp();
}

MatrixXd expm_scaled(const LinearSystem& system, double t) {
  if (!std::isfinite(t)) {
    throw Error(ErrorCode::kInvalidInput, "time must be finite");
  }
  if (t == 0.0) return MatrixXd::Identity(system.n(), system.n());
  return MatrixXd(system.A() * t).exp();
}

LinearSystem laplacian_system(const MatrixXd& adjacency, std::string label) {
  if (adjacency.rows() == 0 || adjacency.rows() != adjacency.cols()) {
    throw Error(ErrorCode::kInvalidInput, "adjacency must be square");
  }
  require_finite(adjacency, "adjacency");
  if ((adjacency.array() < 0.0).any()) {
    throw Error(ErrorCode::kInvalidInput, "adjacency has negative weights");
  }
  if (adjacency.diagonal().cwiseAbs().maxCoeff() != 0.0) {
    throw Error(ErrorCode::kInvalidInput,
                "adjacency must have a zero diagonal (no self loops)");
  }
  MatrixXd A = adjacency;
  A.diagonal() -= adjacency.rowwise().sum();
  return LinearSystem(std::move(A), std::move(label));
}

MatrixXd controllability_matrix(const MatrixXd& A, const MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "controllability matrix: A and B do not conform");
  }
  MatrixXd C(n, n * m);
  C.leftCols(m) = B;
  for (int i = 1; i < n; ++i) {
    C.middleCols(m * i, m) = A * C.middleCols(m * (i - 1), m);
  }
  return C;
}

int numerical_rank(const MatrixXd& M) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& s = svd.singularValues();
  const double tol = static_cast<double>(M.rows()) * s(0) * kEps;
  int r = 0;
  for (int i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++r;
  }
  return r;
}

int min_driver_count(const MatrixXd& A) {
  const int n = static_cast<int>(A.rows());
  const double norm = spectral_norm(A);
  int best = 1;
  for (const Complex& lam : clustered_eigenvalues(A)) {
    MatrixXcd M = -A.cast<Complex>();
    M.diagonal().array() += lam;
    best = std::max(best, n - complex_rank(M, norm));
  }
  return best;
}

ControllabilityReport controllability_report(const LinearSystem& system,
                                             const InputSchematic& schematic) {
  const MatrixXd& A = system.A();
  const MatrixXd& B = schematic.B();
  const int n = system.n();
  if (B.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "input matrix rows must equal system dimension");
  }
  ControllabilityReport report;
  report.kalman_rank = numerical_rank(controllability_matrix(A, B));
  report.controllable = report.kalman_rank == n;

  const double norm = spectral_norm(A);
  report.pbh_ok = true;
  report.min_drivers = 1;
  for (const Complex& lam : clustered_eigenvalues(A)) {
    MatrixXcd shifted = -A.cast<Complex>();
    shifted.diagonal().array() += lam;
    report.min_drivers =
        std::max(report.min_drivers, n - complex_rank(shifted, norm));
    MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = shifted;
    pbh.rightCols(B.cols()) = B.cast<Complex>();
    if (complex_rank(pbh, std::max(norm, spectral_norm(B))) < n) {
      report.pbh_ok = false;
    }
  }
  return report;
}

bool output_controllable_sufficient(const VectorXd& weights,
                                    const InputSchematic& schematic) {
  const MatrixXd& B = schematic.B();
  if (weights.size() != B.rows()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight vector length must equal system dimension");
  }
  const double wn = weights.norm();
  if (wn == 0.0) return false;
  for (int i = 0; i < B.cols(); ++i) {
    const double bn = B.col(i).norm();
    if (bn == 0.0) continue;
    if (std::abs(weights.dot(B.col(i))) > 1e-12 * wn * bn) return true;
  }
  return false;
}

}  // namespace fluxctl
