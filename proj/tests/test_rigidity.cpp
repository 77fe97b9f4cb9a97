#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "bearing/generators.hpp"
#include "bearing/rigidity.hpp"
#include "support/oracles.hpp"

using bearing::Configuration;
using bearing::ErrorCode;
using bearing::Framework;
using bearing::Graph;
using bearing::Index;

namespace {

Framework unit_square_cycle() {
  return Framework(Graph::build(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}),
                   Configuration(2, (Eigen::VectorXd(8) << 0, 0, 1, 0, 0, 1, 1, 1).finished()));
}

Framework cube() { return Framework(Graph::build(8, bearing::cube_edges()), bearing::unit_cube()); }

Framework random_framework(std::mt19937_64& rng, int d, Index n) {
  const auto edges = oracle::random_connected_edges(n, 2 * n, rng);
  return Framework(Graph::build(n, edges), Configuration(d, oracle::random_vector(n * d, rng)));
}

}  // namespace

TEST(Project, AxisAligned) {
  const Eigen::MatrixXd p = bearing::project(Eigen::Vector2d(1, 0));
  EXPECT_TRUE(p.isApprox((Eigen::Matrix2d() << 0, 0, 0, 1).finished()));
}

TEST(Project, DiagonalEigenvalues) {
  const Eigen::MatrixXd p = bearing::project(Eigen::Vector3d(1, 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  EXPECT_NEAR(eig.eigenvalues()(0), 0.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()(1), 1.0, 1e-12);
  EXPECT_NEAR(eig.eigenvalues()(2), 1.0, 1e-12);
}

TEST(Project, ZeroVectorIsDegenerate) {
  try {
    bearing::project(Eigen::Vector3d::Zero());
    FAIL();
  } catch (const bearing::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateVector);
  }
}

TEST(Project, PropertiesOnRandomVectors) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = 2 + trial % 5;
    const Eigen::VectorXd x = oracle::random_vector(d, rng, -10, 10);
    const Eigen::MatrixXd p = bearing::project(x);
    EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((p * p - p).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((p * x).norm(), 1e-12 * x.norm());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
    EXPECT_NEAR(eig.eigenvalues()(0), 0.0, 1e-10);
    for (int k = 1; k < d; ++k) EXPECT_NEAR(eig.eigenvalues()(k), 1.0, 1e-10);
  }
}

TEST(BearingFunction, TwoPoints) {
  const Framework fw(Graph::build(2, {{0, 1}}), Configuration(2, Eigen::Vector4d(0, 0, 2, 0)));
  const auto bv = bearing::bearing_function(fw);
  EXPECT_TRUE(bv.bearing(0).isApprox(Eigen::Vector2d(1, 0)));
  EXPECT_DOUBLE_EQ(bv.lengths(0), 2.0);
}

TEST(BearingFunction, SwappingEndpointsNegatesBearing) {
  const Framework a(Graph::build(2, {{0, 1}}), Configuration(2, Eigen::Vector4d(0.3, -1, 2, 5)));
  const Framework b(Graph::build(2, {{0, 1}}), Configuration(2, Eigen::Vector4d(2, 5, 0.3, -1)));
  EXPECT_TRUE(bearing::bearing_function(a).bearing(0).isApprox(-bearing::bearing_function(b).bearing(0)));
}

TEST(BearingFunction, UnitSquare) {
  const auto bv = bearing::bearing_function(unit_square_cycle());
  EXPECT_TRUE(bv.g.isApprox((Eigen::VectorXd(8) << 1, 0, 0, 1, 0, 1, 1, 0).finished()));
}

TEST(BearingFunction, CoincidentPoints) {
  const Framework fw(Graph::build(3, {{0, 1}, {1, 2}}), Configuration(2, (Eigen::VectorXd(6) << 0, 0, 1, 1, 1, 1).finished()));
  try {
    bearing::bearing_function(fw);
    FAIL();
  } catch (const bearing::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CoincidentPoints);
  }
}

TEST(RigidityMatrix, TwoPoints) {
  const Eigen::VectorXd p = Eigen::Vector4d(0.5, 1, 2, -1);
  const Framework fw(Graph::build(2, {{0, 1}}), Configuration(2, p));
  const auto rb = bearing::bearing_rigidity_matrix(fw);
  const Eigen::Vector2d e = p.tail(2) - p.head(2);
  Eigen::MatrixXd expected(2, 4);
  expected << -Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity();
  expected = (Eigen::Matrix2d::Identity() - e * e.transpose() / e.squaredNorm()) * expected / e.norm();
  EXPECT_TRUE(rb.matrix.isApprox(expected, 1e-14));
  EXPECT_LE((rb.matrix * p).norm(), 1e-14);
  EXPECT_LE((rb.matrix * Eigen::Vector4d(1, 0, 1, 0)).norm(), 1e-14);
  EXPECT_LE((rb.matrix * Eigen::Vector4d(0, 1, 0, 1)).norm(), 1e-14);
  EXPECT_EQ(rb.rank, 1);
}

TEST(RigidityMatrix, CubeRankTwenty) {
  const auto rb = bearing::bearing_rigidity_matrix(cube());
  EXPECT_EQ(rb.rank, 20);
  EXPECT_EQ(rb.null_space.cols(), 4);
  EXPECT_TRUE((rb.null_space.transpose() * rb.null_space).isIdentity(1e-10));
}

TEST(RigidityMatrix, MatchesFiniteDifferenceJacobian) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 3;
    const Framework fw = random_framework(rng, d, 3 + trial % 6);
    const Eigen::MatrixXd r = bearing::bearing_rigidity_matrix(fw).matrix;
    const Eigen::MatrixXd fd = oracle::bearing_jacobian_fd(fw.graph.edge_list(), fw.config.stacked(), d);
    EXPECT_LT((r - fd).norm() / r.norm(), 1e-5) << "trial " << trial;
  }
}

TEST(RigidityMatrix, TrivialMotionsInNullSpace) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = 2 + trial % 3;
    const Framework fw = random_framework(rng, d, 2 + trial % 8);
    const auto rb = bearing::bearing_rigidity_matrix(fw);
    const double rnorm = rb.singular_values(0);
    EXPECT_LE(rb.rank, fw.n() * d - d - 1);
    Eigen::MatrixXd motions(fw.n() * d, d + 1);
    motions << bearing::translation_directions(fw.n(), d), fw.config.stacked();
    for (Index c = 0; c < motions.cols(); ++c) {
      EXPECT_LE((rb.matrix * motions.col(c)).norm(), 1e-9 * rnorm * motions.col(c).norm());
    }
  }
}

TEST(Rigidity, CubeIsRigid) {
  const auto rep = bearing::is_infinitesimally_bearing_rigid(cube());
  EXPECT_TRUE(rep.rigid);
  EXPECT_EQ(rep.rank, 20);
  EXPECT_EQ(rep.required_rank, 20);
  EXPECT_EQ(rep.nontrivial_motions.cols(), 0);
}

TEST(Rigidity, SquareCycleIsNotRigid) {
  const Framework fw = unit_square_cycle();
  const auto rep = bearing::is_infinitesimally_bearing_rigid(fw);
  EXPECT_FALSE(rep.rigid);
  EXPECT_EQ(rep.rank, 4);  // one per edge
  EXPECT_EQ(rep.required_rank, 5);
  ASSERT_EQ(rep.nontrivial_motions.cols(), 1);
  const Eigen::VectorXd v = rep.nontrivial_motions.col(0);
  EXPECT_LE((bearing::bearing_rigidity_matrix(fw).matrix * v).norm(), 1e-12);
  EXPECT_LE((bearing::trivial_motion_basis(fw.config).transpose() * v).norm(), 1e-12);
}

TEST(Rigidity, FiftyAgentNetwork) {
  const auto s = bearing::generate_localization_scenario();
  const auto rep = bearing::is_infinitesimally_bearing_rigid(Framework(s.graph(), Configuration(3, s.positions)));
  EXPECT_TRUE(rep.rigid);
  EXPECT_EQ(rep.rank, 146);
}

TEST(Rigidity, VerdictInvariantUnderSimilarity) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = 2 + trial % 2;
    const Index n = 3 + trial % 5;
    const Framework fw = random_framework(rng, d, n);
    const bool base = bearing::is_infinitesimally_bearing_rigid(fw).rigid;
    // Random orthogonal matrix, positive scale, translation.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(oracle::random_vector(d * d, rng).reshaped(d, d)));
    const Eigen::MatrixXd q = qr.householderQ();
    const double scale = 0.1 + 5.0 * std::abs(oracle::random_vector(1, rng)(0));
    const Eigen::VectorXd t = oracle::random_vector(d, rng, -10, 10);
    Eigen::VectorXd moved(n * d);
    for (Index i = 0; i < n; ++i) moved.segment(i * d, d) = scale * q * fw.config.point(i) + t;
    EXPECT_EQ(bearing::is_infinitesimally_bearing_rigid(Framework(fw.graph, Configuration(d, moved))).rigid, base);
  }
}

TEST(TrivialBasis, TwoPointsByHand) {
  const Eigen::MatrixXd b = bearing::trivial_motion_basis(Configuration(2, Eigen::Vector4d(0, 0, 1, 0)));
  ASSERT_EQ(b.cols(), 3);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_TRUE(b.col(0).isApprox(Eigen::Vector4d(h, 0, h, 0)));
  EXPECT_TRUE(b.col(1).isApprox(Eigen::Vector4d(0, h, 0, h)));
  EXPECT_TRUE(b.col(2).isApprox(Eigen::Vector4d(-h, 0, h, 0)));
}

TEST(TrivialBasis, OrthonormalAndInNullSpace) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 3;
    const Framework fw = random_framework(rng, d, 2 + trial % 7);
    const Eigen::MatrixXd b = bearing::trivial_motion_basis(fw.config);
    EXPECT_EQ(b.cols(), d + 1);
    EXPECT_TRUE((b.transpose() * b).isIdentity(1e-12));
    const Eigen::MatrixXd r = bearing::bearing_rigidity_matrix(fw).matrix;
    EXPECT_LE((r * b).norm(), 1e-9 * r.norm());
  }
}

TEST(TrivialBasis, CoincidentPointsRejected) {
  try {
    bearing::trivial_motion_basis(Configuration(3, Eigen::VectorXd::Constant(9, 2.0)));
    FAIL();
  } catch (const bearing::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateConfiguration);
  }
}
