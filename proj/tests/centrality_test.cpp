#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fluxctl/centrality.hpp"
#include "test_util.hpp"

namespace fluxctl {
namespace {

TEST(FluxCentralityTest, ZeroDynamicsIsUniform) {
  for (int n : {1, 2, 5}) {
    const VectorXd phi = flux_centrality(LinearSystem(MatrixXd::Zero(n, n)), 1.0);
    EXPECT_LT((phi - VectorXd::Constant(n, 1.0 / std::sqrt(n))).norm(), 1e-12);
  }
}

TEST(FluxCentralityTest, FeedingNodeRanksHigher) {
  MatrixXd A = MatrixXd::Zero(2, 2);
  A(1, 0) = 1.0;  // node 1 feeds node 2
  const VectorXd phi = flux_centrality(LinearSystem(A), 1.0);
  EXPECT_GT(phi(0), phi(1));
  EXPECT_NEAR(phi.norm(), 1.0, 1e-12);
}

TEST(FluxCentralityTest, UnitNormNonnegativeSumAndEigenResidual) {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = testing::uniform_int(rng, 2, 8);
    const LinearSystem sys(testing::gaussian(rng, n, n));
    const double t = testing::uniform(rng, 0.1, 2.0);
    const VectorXd phi = flux_centrality(sys, t);
    const FluxMatrix f = flux_matrix(sys, VectorXd::Ones(n), t);
    EXPECT_NEAR(phi.norm(), 1.0, 1e-10);
    EXPECT_GE(phi.sum(), 0.0);
    EXPECT_LE((f.Phi * phi - f.lambda_max * phi).norm(), 1e-8 * f.lambda_max);
  }
}

TEST(FluxCentralityTest, LaplacianFluxIsUniformAtEveryHorizon) {
  // A 1 = 0 for A = -L, so Phi_1 = t 1 1^T and every node is equally central.
  const LinearSystem sys = laplacian_system(testing::karate_adjacency());
  for (double t : {0.015, 1.0, 3.0}) {
    const VectorXd phi = flux_centrality(sys, t);
    EXPECT_LT((phi - VectorXd::Constant(34, 1.0 / std::sqrt(34.0))).norm(), 1e-10);
  }
}

TEST(FluxSweepTest, ZeroDynamicsRowsIdentical) {
  const FluxProfile p = flux_sweep(LinearSystem(MatrixXd::Zero(3, 3)), {0.1, 1.0, 10.0});
  ASSERT_EQ(p.phi.rows(), 3);
  EXPECT_LT((p.phi.row(0) - p.phi.row(2)).norm(), 1e-12);
  EXPECT_NEAR(p.lambda_max[2], 30.0, 1e-10);
}

TEST(FluxSweepTest, DiagonalMassShiftsTowardGrowingNode) {
  const MatrixXd A = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  const FluxProfile p = flux_sweep(LinearSystem(A), {0.1, 5.0});
  EXPECT_GT(p.phi(1, 0), p.phi(0, 0));
  EXPECT_GT(p.phi(1, 0), p.phi(1, 1));
}

TEST(FluxSweepTest, KarateAdjacencyRankingChangesWithHorizon) {
  const LinearSystem sys(testing::karate_adjacency());
  const FluxProfile p = flux_sweep(sys, {0.015, 0.15, 1.5});
  ASSERT_EQ(p.phi.rows(), 3);
  ASSERT_EQ(p.phi.cols(), 34);
  for (int h = 0; h < 3; ++h) EXPECT_NEAR(p.phi.row(h).norm(), 1.0, 1e-10);
  EXPECT_LT(spearman(p.phi.row(0).transpose(), p.phi.row(2).transpose()), 1.0);
}

TEST(FluxSweepTest, RejectsBadHorizons) {
  const LinearSystem sys(MatrixXd::Zero(2, 2));
  EXPECT_THROW(flux_sweep(sys, {}), Error);
  EXPECT_THROW(flux_sweep(sys, {1.0, 0.5}), Error);
  EXPECT_THROW(flux_sweep(sys, {0.0, 0.5}), Error);
}

TEST(SpearmanTest, KnownValues) {
  const Eigen::Vector4d a(1, 2, 3, 4);
  EXPECT_DOUBLE_EQ(spearman(a, Eigen::Vector4d(10, 20, 30, 40)), 1.0);
  EXPECT_NEAR(spearman(a, Eigen::Vector4d(4, 3, 2, 1)), -1.0, 1e-15);
  // Ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4): scipy gives 0.9486832980505138.
  EXPECT_NEAR(spearman(Eigen::Vector4d(1, 2, 2, 3), a), 0.9486832980505138, 1e-14);
  EXPECT_EQ(spearman(VectorXd::Constant(5, 0.3), VectorXd::Constant(5, 0.3)), 1.0);
  EXPECT_THROW(spearman(a, Eigen::Vector3d(1, 2, 3)), Error);
}

TEST(HistogramTest, FreedmanDiaconisBins) {
  VectorXd x(8);
  x << 0, 1, 2, 3, 4, 5, 6, 7;
  const Histogram h = freedman_diaconis(x);
  // IQR 3.5 -> width 2 * 3.5 / 2 = 3.5, range 7 -> 2 bins.
  EXPECT_DOUBLE_EQ(h.width, 3.5);
  ASSERT_EQ(h.counts.size(), 2u);
  EXPECT_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0), 8);
  const Histogram flat = freedman_diaconis(VectorXd::Constant(4, 2.0));
  ASSERT_EQ(flat.counts.size(), 1u);
  EXPECT_EQ(flat.counts[0], 4);
  EXPECT_THROW(freedman_diaconis(VectorXd()), Error);
}

}  // namespace
}  // namespace fluxctl
