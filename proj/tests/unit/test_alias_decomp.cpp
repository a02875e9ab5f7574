#include <gtest/gtest.h>

#include "ahmm/alias_decomp.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ahmm;

namespace {

double second_singular(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto s = svd.singularValues();
  return s.size() > 1 ? s(1) : 0.0;
}

double example_beta() { return *stationary(example_model()).beta; }

}  // namespace

TEST(AliasDecomp, OperatorsAreExplicit) {
  const Matrix b = merge_operator(4);
  Matrix expect_b(3, 4);
  expect_b << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1;
  EXPECT_EQ(b, expect_b);
  const Matrix c = lift_operator(4, 0.25);
  Matrix expect_c(4, 3);
  expect_c << 1, 0, 0, 0, 1, 0, 0, 0, 0.25, 0, 0, 0.75;
  EXPECT_EQ(c, expect_c);
  EXPECT_EQ(aliased_difference(4), (Vector(4) << 0, 0, 1, -1).finished());
  EXPECT_EQ(aliased_split(4, 0.25), (Vector(4) << 0, 0, 0.75, -0.25).finished());
  // B C_beta = I, c_beta^T C_beta = 0, B b = 0.
  EXPECT_TRUE((b * c).isIdentity(1e-15));
  EXPECT_NEAR((aliased_split(4, 0.25).transpose() * c).norm(), 0.0, 1e-15);
  EXPECT_NEAR((b * aliased_difference(4)).norm(), 0.0, 1e-15);
}

TEST(AliasDecomp, PaperMergedMatrix) {
  const auto h = example_model();
  const double beta = example_beta();
  const Matrix abar = merge(h.transition(), beta);
  // Explicit product oracle.
  const Matrix& a = h.transition();
  EXPECT_NEAR(abar(0, 2), beta * a(0, 2) + (1 - beta) * a(0, 3), 1e-15);
  EXPECT_NEAR(abar(0, 2), (1 - beta) * 0.8, 1e-15);
  EXPECT_NEAR(abar(0, 2), 0.393, 1e-3);
  EXPECT_NEAR(abar(1, 2), beta * 0.2, 1e-15);
  EXPECT_NEAR(abar(1, 2), 0.102, 1e-3);
  EXPECT_NEAR(abar(2, 0), 0.1, 1e-15);
  EXPECT_NEAR(abar(2, 1), 0.5, 1e-15);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(abar.col(j).sum(), 1.0, 1e-15);
}

TEST(AliasDecomp, MergeRejectsBadBeta) {
  EXPECT_THROW(merge(example_model().transition(), 1.5), ValidationError);
  EXPECT_THROW(merge(example_model().transition(), -0.1), ValidationError);
}

TEST(AliasDecomp, PaperRelativeEntry) {
  const Vector alpha = relative_entry(example_model().transition());
  const Vector expect = (Vector(4) << 0.0, 1.0, 0.1 / 0.8, 0.1 / 0.2).finished();
  EXPECT_LT((alpha - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AliasDecomp, PaperDeltaOut) {
  const auto d = decompose(example_model().transition(), example_beta());
  const Vector expect = (Vector(3) << -0.8, 0.2, 0.6).finished();
  EXPECT_LT((d.delta_out - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AliasDecomp, PaperRoundTrip) {
  const Matrix a = example_model().transition();
  const auto d = decompose(a, example_beta());
  EXPECT_LT((reconstruct(d) - a).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AliasDecomp, ZeroCorrectionsGiveRankStructuredLift) {
  AliasDecomposition d;
  d.merged = (Matrix(3, 3) << 0.2, 0.5, 0.3, 0.3, 0.1, 0.3, 0.5, 0.4, 0.4).finished();
  d.beta = 0.3;
  d.alpha = Vector::Zero(4);
  d.delta_out = Vector::Zero(3);
  d.delta_in = Vector::Zero(3);
  d.kappa = 0.0;
  const Matrix expect = lift_operator(4, 0.3) * d.merged * merge_operator(4);
  EXPECT_LT((reconstruct(d) - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AliasDecomp, RandomRoundTripsAndTerms) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const int n = 3 + k % 6;
    const Matrix a = oracle::random_stochastic(n, 0.3, rng);
    // Any beta in [0, 1] reconstructs exactly, not just the stationary one.
    const double beta = k % 2 ? u(rng) : oracle::power_iteration(a)(n - 2) /
                                             (oracle::power_iteration(a)(n - 2) + oracle::power_iteration(a)(n - 1));
    const auto d = decompose(a, beta);
    ASSERT_LT((reconstruct(d) - a).cwiseAbs().maxCoeff(), 1e-12) << "model " << k;
    const auto terms = reconstruction_terms(d);
    for (int t = 1; t < 4; ++t) EXPECT_LT(second_singular(terms[t]), 1e-12);
    EXPECT_LT((Vector::Ones(n).transpose() * reconstruct(d) - Vector::Ones(n).transpose()).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(AliasDecomp, LiftingIdentities) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const int n = 3 + k % 5;
    const Matrix a = oracle::random_stochastic(n, 0.2, rng);
    if (!oracle::reachable_all(a)) continue;
    const Vector pi = stationary_distribution(a);
    const double beta = pi(n - 2) / (pi(n - 2) + pi(n - 1));
    const Matrix b = merge_operator(n);
    const Matrix c = lift_operator(n, beta);
    const Vector pibar = b * pi;
    EXPECT_LT((merge(a, beta) - b * a * c).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((c * pibar - pi).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((merge(a, beta) * pibar - pibar).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AliasDecomp, RelativeEntryIgnoresDust) {
  Matrix a = example_model().transition();
  a(2, 0) = 1e-16;
  a(3, 0) = 0.1 - 1e-16;
  const Vector alpha = relative_entry(a);
  EXPECT_GE(alpha(0), 0.0);
  EXPECT_LE(alpha(0), 1.0);
  Matrix z = example_model().transition();
  z(2, 1) = 0.0;
  z(0, 1) += 0.5;
  EXPECT_EQ(relative_entry(z)(1), 0.0);
}
