#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fluxctl/state_select.hpp"
#include "test_util.hpp"

namespace fluxctl {
namespace {

using testing::gaussian;
using testing::random_stable;

GramianBundle scalar_bundle(double w) { return make_bundle(MatrixXd::Constant(1, 1, w), 1.0); }

GramianBundle diag_bundle(double a, double b) {
  return make_bundle(Eigen::Vector2d(a, b).asDiagonal(), 1.0);
}

double quad_energy(const MatrixXd& W, const VectorXd& z, const VectorXd& x) {
  return (x - z).dot(W.ldlt().solve(x - z));
}

MatrixXd random_spd(std::mt19937_64& rng, int n) {
  const MatrixXd G = gaussian(rng, n, n);
  return G * G.transpose() + 0.2 * MatrixXd::Identity(n, n);
}

VectorXd random_unit(std::mt19937_64& rng, int n) {
  return gaussian(rng, n, 1).normalized();
}

TEST(BindingCheckTest, Examples) {
  EXPECT_TRUE(binding_check(LinearGoal{VectorXd::Ones(2), 2.0}, VectorXd::Zero(2)));
  EXPECT_FALSE(binding_check(LinearGoal{VectorXd::Ones(2), -1.0}, VectorXd::Zero(2)));
  EXPECT_FALSE(binding_check(VarianceGoal{1.0}, Eigen::Vector2d(3.0, -3.0)));
  EXPECT_DOUBLE_EQ(goal_statistic(VarianceGoal{1.0}, Eigen::Vector2d(3.0, -3.0)), 18.0);
  const RepulsionGoal contract{MatrixXd::Identity(2, 2), VectorXd::Zero(2), 1.0, Sense::kContract};
  EXPECT_TRUE(binding_check(contract, Eigen::Vector2d(2.0, 0.0)));
  EXPECT_FALSE(binding_check(contract, Eigen::Vector2d(0.5, 0.0)));
}

TEST(CenteringMatrixTest, ProjectsOutTheMean) {
  const MatrixXd D = centering_matrix(4);
  EXPECT_LT((D * VectorXd::Ones(4)).norm(), 1e-15);
  EXPECT_LT((D * D - D).norm(), 1e-15);
}

TEST(MeanStateTest, ScalarOracle) {
  const StateSelection s = select_mean_state(scalar_bundle(1.0), VectorXd::Zero(1),
                                             LinearGoal{VectorXd::Ones(1), 1.0});
  EXPECT_NEAR(s.x_star(0), 1.0, 1e-15);
  EXPECT_NEAR(s.energy, 1.0, 1e-15);
  EXPECT_NEAR(s.multiplier, -2.0, 1e-15);
  EXPECT_TRUE(s.binding);
}

TEST(MeanStateTest, SingularGramianControlledCoordinate) {
  MatrixXd W = MatrixXd::Zero(2, 2);
  W(0, 0) = 1.0;
  const StateSelection s = select_mean_state(make_bundle(W, 1.0), VectorXd::Zero(2), mean_goal(2, 1.0));
  EXPECT_LT((s.x_star - Eigen::Vector2d(2.0, 0.0)).norm(), 1e-14);
  EXPECT_NEAR(s.energy, 4.0, 1e-14);
}

TEST(MeanStateTest, SatisfiedGoalIsCorner) {
  const VectorXd z = Eigen::Vector2d(1.0, 1.0);
  const StateSelection s = select_mean_state(diag_bundle(1, 1), z, LinearGoal{VectorXd::Ones(2), 2.0});
  EXPECT_EQ(s.x_star, z);
  EXPECT_EQ(s.energy, 0.0);
  EXPECT_FALSE(s.binding);
}

TEST(MeanStateTest, UncontrollableObserverRejected) {
  MatrixXd W = MatrixXd::Zero(2, 2);
  W(0, 0) = 1.0;
  try {
    select_mean_state(make_bundle(W, 1.0), VectorXd::Zero(2), LinearGoal{VectorXd::Unit(2, 1), 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kGoalUncontrollable);
  }
}

TEST(MeanStateTest, MatchesKktSolveOnRandomSystems) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = testing::uniform_int(rng, 1, 6);
    const LinearSystem sys(random_stable(rng, n));
    const GramianBundle b = reachability_gramian(sys, InputSchematic(gaussian(rng, n, n)), 1.0);
    const VectorXd z = gaussian(rng, n, 1);
    const VectorXd v = gaussian(rng, n, 1);
    const double c = v.dot(z) + testing::uniform(rng, 0.5, 3.0);
    const StateSelection s = select_mean_state(b, z, LinearGoal{v, c});

    MatrixXd K = MatrixXd::Zero(n + 1, n + 1);
    const MatrixXd Winv = b.W.inverse();
    K.topLeftCorner(n, n) = 2.0 * Winv;
    K.topRightCorner(n, 1) = v;
    K.bottomLeftCorner(1, n) = v.transpose();
    VectorXd rhs(n + 1);
    rhs << 2.0 * Winv * z, c;
    const VectorXd sol = K.fullPivLu().solve(rhs);
    const VectorXd x = sol.head(n);
    EXPECT_LT((s.x_star - x).norm(), 1e-6 * std::max(1.0, x.norm()));
    EXPECT_LT(testing::rel_err(s.energy, quad_energy(b.W, z, x)), 1e-6);
    const double alpha = v.dot(z) - c;
    EXPECT_LT(testing::rel_err(s.energy * kappa(b, v), alpha * alpha), 1e-10);
    EXPECT_NEAR(v.dot(s.x_star), c, 1e-8 * (1.0 + std::abs(c)));
  }
}

TEST(RepulsionStateTest, ScalarEnergyIsEtaTimesInverse) {
  const StateSelection s = select_repulsion_state(scalar_bundle(1.0), VectorXd::Zero(1), 4.0);
  EXPECT_NEAR(std::abs(s.x_star(0)), 2.0, 1e-15);
  EXPECT_NEAR(s.energy, 4.0, 1e-15);
  EXPECT_NEAR(s.multiplier, 1.0, 1e-15);
}

TEST(RepulsionStateTest, LeadingEigenvectorOfDiagonalGramian) {
  const StateSelection s = select_repulsion_state(diag_bundle(4, 1), VectorXd::Zero(2), 9.0);
  EXPECT_NEAR(std::abs(s.x_star(0)), 3.0, 1e-14);
  EXPECT_NEAR(s.x_star(1), 0.0, 1e-14);
  EXPECT_NEAR(s.energy, 9.0 / 4.0, 1e-15);
}

TEST(RepulsionStateTest, ZeroThresholdIsCorner) {
  const StateSelection s = select_repulsion_state(diag_bundle(4, 1), Eigen::Vector2d(1, 2), 0.0);
  EXPECT_EQ(s.x_star, Eigen::Vector2d(1, 2));
  EXPECT_EQ(s.energy, 0.0);
}

TEST(RepulsionStateTest, SingularGramianRejected) {
  try {
    select_repulsion_state(diag_bundle(1, 0), VectorXd::Zero(2), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRequiresControllability);
  }
}

TEST(RepulsionStateTest, BeatsRandomBoundaryDirections) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = testing::uniform_int(rng, 2, 5);
    const MatrixXd W = random_spd(rng, n);
    const GramianBundle b = make_bundle(W, 1.0);
    const VectorXd z = gaussian(rng, n, 1);
    const double eta = testing::uniform(rng, 0.1, 5.0);
    const StateSelection s = select_repulsion_state(b, z, eta);
    EXPECT_NEAR((s.x_star - z).squaredNorm(), eta, 1e-10 * (1.0 + eta));
    for (int k = 0; k < 1000; ++k) {
      const VectorXd x = z + std::sqrt(eta) * random_unit(rng, n);
      EXPECT_GE(quad_energy(W, z, x), s.energy - 1e-8);
    }
  }
}

TEST(QclsTest, IdentityAroundZDelegatesToRepulsion) {
  std::mt19937_64 rng(35);
  const MatrixXd W = random_spd(rng, 4);
  const GramianBundle b = make_bundle(W, 1.0);
  const VectorXd z = gaussian(rng, 4, 1);
  const StateSelection q = solve_qcls(b, z, MatrixXd::Identity(4, 4), z, 2.0, Sense::kExpand);
  const StateSelection r = select_repulsion_state(b, z, 2.0);
  EXPECT_NEAR(q.energy, r.energy, 1e-8);
  EXPECT_EQ(q.x_star, r.x_star);
}

TEST(QclsTest, SecularAtZeroIsAutonomousResidual) {
  std::mt19937_64 rng(37);
  const MatrixXd W = random_spd(rng, 3);
  const GramianBundle b = make_bundle(W, 1.0);
  const VectorXd z = gaussian(rng, 3, 1);
  const MatrixXd O = gaussian(rng, 3, 3);
  const VectorXd d = gaussian(rng, 3, 1);
  EXPECT_NEAR(qcls_secular(b, z, O, d, 0.0), (O * z - d).squaredNorm(), 1e-12);
}

TEST(QclsTest, MatchesGridSearchOnCircle) {
  const GramianBundle b = diag_bundle(1, 4);
  const VectorXd z = VectorXd::Zero(2);
  const VectorXd d = Eigen::Vector2d(1.0, 0.0);
  const StateSelection s = solve_qcls(b, z, MatrixXd::Identity(2, 2), d, 4.0, Sense::kExpand);
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  for (int k = 0; k < 10000; ++k) {
    const double th = 2.0 * std::numbers::pi * k / 10000.0;
    const VectorXd x = d + 2.0 * Eigen::Vector2d(std::cos(th), std::sin(th));
    const double e = quad_energy(b.W, z, x);
    if (e < best) best = e, best_x = x;
  }
  EXPECT_NEAR(s.energy, best, 1e-3 * best);
  EXPECT_LE(s.energy, best + 1e-12);
  EXPECT_NEAR((s.x_star - d).squaredNorm(), 4.0, 1e-10);
  // Two mirror optima exist; compare against the nearer one.
  VectorXd mirror = best_x;
  mirror(1) = -mirror(1);
  EXPECT_LT(std::min((s.x_star - best_x).norm(), (s.x_star - mirror).norm()), 2e-3);
}

TEST(QclsTest, RootSatisfiesSecularEquation) {
  std::mt19937_64 rng(39);
  int interior = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = testing::uniform_int(rng, 2, 5);
    const GramianBundle b = make_bundle(random_spd(rng, n), 1.0);
    const VectorXd z = gaussian(rng, n, 1);
    const MatrixXd O = gaussian(rng, n, n);
    const VectorXd d = gaussian(rng, n, 1);
    const double eta = (O * z - d).squaredNorm() + testing::uniform(rng, 0.5, 4.0);
    const StateSelection s = solve_qcls(b, z, O, d, eta, Sense::kExpand);
    const double pole = qcls_pole(b, O);
    ASSERT_GE(s.multiplier, 0.0);
    ASSERT_LE(s.multiplier, pole * (1.0 + 1e-12));
    EXPECT_NEAR(goal_statistic(RepulsionGoal{O, d, eta, Sense::kExpand}, s.x_star), eta,
                1e-8 * (1.0 + eta));
    if (s.multiplier < pole * (1.0 - 1e-9)) {
      ++interior;
      EXPECT_NEAR(qcls_secular(b, z, O, d, s.multiplier), eta, 1e-8 * (1.0 + eta));
      // f increases on (0, pole).
      double prev = qcls_secular(b, z, O, d, 0.0);
      for (int k = 1; k < 20; ++k) {
        const double f = qcls_secular(b, z, O, d, pole * k / 20.0);
        EXPECT_GE(f, prev - 1e-12 * (1.0 + prev));
        prev = f;
      }
    }
  }
  EXPECT_GT(interior, 0);
}

TEST(QclsTest, BeatsBoundarySamplesBothSenses) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = testing::uniform_int(rng, 2, 4);
    const MatrixXd W = random_spd(rng, n);
    const GramianBundle b = make_bundle(W, 1.0);
    const VectorXd z = gaussian(rng, n, 1);
    const MatrixXd O = gaussian(rng, n, n) + 2.0 * MatrixXd::Identity(n, n);
    const VectorXd d = gaussian(rng, n, 1);
    const double f0 = (O * z - d).squaredNorm();
    const Sense sense = trial % 2 ? Sense::kContract : Sense::kExpand;
    const double eta = sense == Sense::kExpand ? f0 + testing::uniform(rng, 0.5, 3.0)
                                               : f0 * testing::uniform(rng, 0.1, 0.8);
    const StateSelection s = solve_qcls(b, z, O, d, eta, sense);
    EXPECT_NEAR((O * s.x_star - d).squaredNorm(), eta, 1e-8 * (1.0 + eta));
    EXPECT_NEAR(s.energy, quad_energy(W, z, s.x_star), 1e-8 * (1.0 + s.energy));
    const MatrixXd Oinv = O.inverse();
    for (int k = 0; k < 1000; ++k) {
      const VectorXd x = Oinv * (d + std::sqrt(eta) * random_unit(rng, n));
      EXPECT_GE(quad_energy(W, z, x), s.energy * (1.0 - 1e-8) - 1e-10);
    }
  }
}

TEST(QclsTest, ContractBelowReachableMinimumIsInfeasible) {
  MatrixXd W = MatrixXd::Zero(2, 2);
  W(0, 0) = 1.0;
  const GramianBundle b = make_bundle(W, 1.0);
  const VectorXd d = Eigen::Vector2d(2.0, 3.0);
  try {
    solve_qcls(b, VectorXd::Zero(2), MatrixXd::Identity(2, 2), d, 4.0, Sense::kContract);
    FAIL();
  } catch (const InfeasibleGoal& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleGoal);
    EXPECT_NEAR(e.min_eta(), 9.0, 1e-12);
  }
  // eta = 10: x = (a, 0) with (a - 2)^2 <= 1, cheapest a = 1.
  const StateSelection s =
      solve_qcls(b, VectorXd::Zero(2), MatrixXd::Identity(2, 2), d, 10.0, Sense::kContract);
  EXPECT_NEAR(s.x_star(0), 1.0, 1e-9);
  EXPECT_NEAR(s.x_star(1), 0.0, 1e-12);
  EXPECT_NEAR(s.energy, 1.0, 1e-9);
}

TEST(QclsTest, ComputedPoleMatchesGeneralizedEigenvalue) {
  // (W^-1, O^T O) with W = diag(1, 4), O = I: eigenvalues 1 and 1/4.
  EXPECT_NEAR(qcls_pole(diag_bundle(1, 4), MatrixXd::Identity(2, 2)), 0.25, 1e-14);
}

TEST(VarianceStateTest, IdentityGramianExample) {
  const GramianBundle b = diag_bundle(1, 1);
  const StateSelection s = select_variance_state(b, VectorXd::Zero(2), 2.0);
  EXPECT_NEAR(s.energy, 2.0, 1e-10);
  EXPECT_NEAR(std::abs(s.x_star(0)), 1.0, 1e-10);
  EXPECT_NEAR(s.x_star(0) + s.x_star(1), 0.0, 1e-10);
  EXPECT_NEAR(variance_energy_bound(b, VectorXd::Zero(2), 2.0), 2.0, 1e-12);
  const VarianceSpectrum spec = variance_spectrum(b);
  EXPECT_NEAR(spec.lambda_min_plus, 1.0, 1e-12);
  EXPECT_NEAR(spec.omega.norm(), 1.0, 1e-12);
}

TEST(VarianceStateTest, AlreadySpreadIsCorner) {
  const VectorXd z = Eigen::Vector2d(1.0, -1.0);  // ||Dz||^2 = 2
  const StateSelection s = select_variance_state(diag_bundle(1, 1), z, 2.0);
  EXPECT_EQ(s.x_star, z);
  EXPECT_EQ(s.energy, 0.0);
  EXPECT_FALSE(s.binding);
}

TEST(VarianceStateTest, SingleNodeUndefined) {
  try {
    select_variance_state(scalar_bundle(1.0), VectorXd::Zero(1), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVarianceUndefined);
  }
}

TEST(VarianceStateTest, BoundHoldsOnRandomInstances) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testing::uniform_int(rng, 2, 6);
    const LinearSystem sys(random_stable(rng, n));
    const int m = testing::uniform_int(rng, 1, n);
    const GramianBundle b = reachability_gramian(sys, InputSchematic(gaussian(rng, n, m)),
                                                 testing::uniform(rng, 0.5, 2.0));
    const VectorXd z = 0.3 * gaussian(rng, n, 1);
    const double eta = goal_statistic(VarianceGoal{0.0}, z) + testing::uniform(rng, 0.1, 3.0);
    const StateSelection s = select_variance_state(b, z, eta);
    const double bound = variance_energy_bound(b, z, eta);
    EXPECT_LE(s.energy, bound * (1.0 + 1e-8)) << "trial " << trial;
    EXPECT_NEAR(goal_statistic(VarianceGoal{eta}, s.x_star), eta, 1e-8 * (1.0 + eta));
  }
}

TEST(VarianceStateTest, ZeroThresholdBoundFormula) {
  const VectorXd z = Eigen::Vector2d(1.0, -1.0);
  EXPECT_NEAR(variance_energy_bound(diag_bundle(1, 1), z, 0.0), 2.0, 1e-12);
}

TEST(ThresholdTest, MinimumThresholdExamples) {
  EXPECT_EQ(repulsion_min_threshold(Eigen::Vector3d(0, 1, 0)), 0.0);
  EXPECT_DOUBLE_EQ(repulsion_min_threshold(Eigen::Vector2d(1, 1)), 1.0);
  EXPECT_EQ(repulsion_min_threshold(VectorXd::Zero(3)), 0.0);
}

TEST(ThresholdTest, SingleInputConstructionDiscriminant) {
  const VectorXd d = Eigen::Vector3d(1.0, -3.0, 2.0);
  const double thr = repulsion_min_threshold(d);
  EXPECT_DOUBLE_EQ(thr, 5.0);
  const SingleInputReach at = single_input_repulsion(d, thr, 2.0);
  EXPECT_EQ(at.k, 1);
  EXPECT_TRUE(at.feasible);
  ASSERT_FALSE(at.scalings.empty());
  for (double beta : at.scalings) {
    VectorXd x = VectorXd::Zero(3);
    x(at.k) = beta * std::sqrt(2.0);
    EXPECT_NEAR((x - d).squaredNorm(), thr, 1e-12);
  }
  EXPECT_FALSE(single_input_repulsion(d, thr - 0.5, 2.0).feasible);
  EXPECT_LT(single_input_repulsion(d, thr - 0.5, 2.0).discriminant, 0.0);
}

TEST(TransferEnergyTest, PseudoInverseQuadraticForm) {
  const GramianBundle b = diag_bundle(2, 0);
  EXPECT_NEAR(transfer_energy(b, VectorXd::Zero(2), Eigen::Vector2d(2.0, 0.0)), 2.0, 1e-14);
}

TEST(SelectStateTest, DispatchesOnGoal) {
  const GramianBundle b = diag_bundle(1, 1);
  const VectorXd z = VectorXd::Zero(2);
  EXPECT_NEAR(select_state(b, z, mean_goal(2, 1.0)).energy, 2.0, 1e-14);
  EXPECT_NEAR(select_state(b, z, VarianceGoal{2.0}).energy, 2.0, 1e-10);
  const RepulsionGoal rep{MatrixXd::Identity(2, 2), z, 3.0, Sense::kExpand};
  EXPECT_NEAR(select_state(b, z, rep).energy, 3.0, 1e-14);
  EXPECT_DOUBLE_EQ(goal_threshold(mean_goal(2, 1.0)), 2.0);
}

}  // namespace
}  // namespace fluxctl
