#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ahmm/experiments.hpp"
#include "ahmm/learner.hpp"
#include "ahmm/structure.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ahmm;

namespace {

// Factors of the true decomposition, with the SVD of the population dM2.
AliasedFactors true_factors(const Hmm& h) {
  const auto m = population_moments(h);
  const auto d = decompose(h.transition(), *stationary(h).beta);
  Eigen::JacobiSVD<Matrix> svd(m.dm2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  AliasedFactors f;
  f.merged = d.merged;
  f.kappa = d.kappa;
  f.sigma = svd.singularValues()(0);
  f.u = svd.matrixU().col(0);
  f.v = svd.matrixV().col(0);
  return f;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto k = v.size();
  return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

TEST(Detect, ThresholdFormula) {
  EXPECT_NEAR(detection_threshold(1000), 2.0 * std::pow(1000.0, -1.0 / 3.0), 1e-15);
  EXPECT_NEAR(detection_threshold(2000, {3.0, 0.25}), 3.0 * std::pow(2000.0, -0.25), 1e-15);
  EXPECT_THROW(detection_threshold(0), ValidationError);
}

TEST(Detect, ZeroMatrixIsNonAliased) {
  MomentSet m;
  m.provenance = Provenance::Empirical;
  m.length = 500;
  m.kernel = Matrix::Identity(3, 3);
  m.dm2 = Matrix::Zero(3, 3);
  const auto d = detect(m);
  EXPECT_FALSE(d.aliased);
  EXPECT_EQ(d.sigma_hat, 0.0);
}

TEST(Detect, PopulationPaperModel) {
  const auto m = population_moments(example_model());
  const auto d = detect(m);
  EXPECT_TRUE(d.aliased);
  EXPECT_EQ(d.threshold, kPopulationDetectionThreshold);
  EXPECT_NEAR(d.u_hat.norm(), 1.0, 1e-12);
  EXPECT_NEAR(d.v_hat.norm(), 1.0, 1e-12);
  const auto dec = decompose(example_model().transition(), *stationary(example_model()).beta);
  EXPECT_NEAR(d.sigma_hat, dec.delta_out.norm() * dec.delta_in.norm(), 1e-10);
  EXPECT_LT(d.sigma_second, 1e-12);
  EXPECT_FALSE(detect(population_moments(merged_model(example_model()))).aliased);
}

TEST(Detect, VerdictFollowsThreshold) {
  const auto h = example_model();
  const auto st = stationary(h);
  const auto y = simulate(h, 3000, 8).outputs;
  const auto m = empirical_moments(y, h.unique_emissions(), st.pi_merged);
  const auto d = detect(m);
  EXPECT_EQ(d.aliased, d.sigma_hat >= d.threshold);
  const auto hi = detect(m, m.length, {1e6, 1.0 / 3.0});
  EXPECT_FALSE(hi.aliased);
}

TEST(Identify, PopulationExact) {
  const auto s = identify_component(population_moments(example_model()));
  EXPECT_EQ(s.index, 2);
  EXPECT_LT(s.scores(2), 1e-20);
  EXPECT_GT(s.scores(0), 0.0);
  EXPECT_GT(s.scores(1), 0.0);
}

TEST(Kappa, Examples) {
  Matrix a(2, 2);
  a << 1.0, -2.0, 0.5, 3.0;
  EXPECT_NEAR(estimate_kappa(Matrix(0.7 * a), a), 0.7, 1e-15);
  Matrix orth(2, 2);
  orth << 2.0, 1.0, 0.0, 0.0;  // <orth, a>_F = 2 - 2 = 0
  EXPECT_NEAR(estimate_kappa(orth, a), 0.0, 1e-15);
  EXPECT_THROW(estimate_kappa(a, Matrix::Zero(2, 2)), NumericalError);
}

TEST(Kappa, PopulationMatchesDecomposition) {
  const auto h = example_model();
  const auto d = decompose(h.transition(), *stationary(h).beta);
  EXPECT_NEAR(estimate_kappa(population_moments(h)), d.kappa, 1e-10);
}

TEST(Kappa, MinimizesResidualAgainstGoldenSection) {
  const auto h = example_model();
  const auto m = empirical_moments(simulate(h, 5000, 3).outputs, h.unique_emissions(), stationary(h).pi_merged);
  const double k = estimate_kappa(m);
  const double g = oracle::golden_section([&](double r) { return (m.dm3 - r * m.dm2).squaredNorm(); }, -10.0, 10.0);
  EXPECT_NEAR(k, g, 1e-8);
}

TEST(GammaBeta, PopulationRecoversTruth) {
  const auto h = example_model();
  const auto f = true_factors(h);
  const auto d = decompose(h.transition(), *stationary(h).beta);
  const auto est = estimate_gamma_beta(f);
  EXPECT_NEAR(est.gamma, d.delta_out.norm(), 1e-3);
  // Swapping the aliased labels maps beta to 1 - beta.
  EXPECT_LT(std::min(std::abs(est.beta - d.beta), std::abs(est.beta - (1.0 - d.beta))), 1e-3);
  EXPECT_GE(est.objective, -1e-12);
}

TEST(GammaBeta, ObjectiveAtTruthNonNegative) {
  const auto h = example_model();
  auto f = true_factors(h);
  const auto d = decompose(h.transition(), *stationary(h).beta);
  // The SVD sign may be either; the truth is feasible for one of the two.
  double best = gamma_beta_objective(f, d.delta_out.norm(), d.beta);
  f.u = -f.u;
  f.v = -f.v;
  best = std::max(best, gamma_beta_objective(f, d.delta_out.norm(), d.beta));
  EXPECT_GE(best, -1e-12);
}

TEST(GammaBeta, SignPairInvariance) {
  auto f = true_factors(example_model());
  const auto a = estimate_gamma_beta(f);
  f.u = -f.u;
  f.v = -f.v;
  const auto b = estimate_gamma_beta(f);
  EXPECT_DOUBLE_EQ(a.gamma, b.gamma);
  EXPECT_DOUBLE_EQ(a.beta, b.beta);
  EXPECT_NE(a.flipped, b.flipped);
}

TEST(GammaBeta, DominatesTruthOnRandomModels) {
  std::mt19937_64 rng(51);
  for (int k = 0; k < 30; ++k) {
    const auto h = oracle::random_aliased_model(3 + k % 4, 0.3, rng);
    auto f = true_factors(h);
    const auto d = decompose(h.transition(), *stationary(h).beta);
    const double gamma = d.delta_out.norm();
    if (gamma > 2.0 / f.sigma || gamma < 1e-3 * f.sigma) continue;
    const auto est = estimate_gamma_beta(f);
    double truth = gamma_beta_objective(f, gamma, d.beta);
    f.u = -f.u;
    f.v = -f.v;
    truth = std::max(truth, gamma_beta_objective(f, gamma, d.beta));
    EXPECT_GE(est.objective, truth - 1e-9) << "model " << k;
  }
}

TEST(Assemble, ExactComponentsGiveA) {
  const auto h = example_model();
  auto f = true_factors(h);
  const auto d = decompose(h.transition(), *stationary(h).beta);
  // Orient (u, v) so that u points along delta_out.
  if (f.u.dot(d.delta_out) < 0) f.u = -f.u, f.v = -f.v;
  const auto p = assemble(f, d.delta_out.norm(), d.beta);
  EXPECT_LT((p.a - h.transition()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(p.negativity_mass, 1e-12);
  EXPECT_THROW(assemble(f, 0.0, d.beta), ValidationError);
  EXPECT_THROW(assemble(f, 1.0, 1.5), ValidationError);
}

TEST(Projection, ClipsAndRenormalizes) {
  Matrix x = example_model().transition();
  x(0, 2) = -1e-6;
  const auto p = project_column_stochastic(x);
  EXPECT_EQ(p.a(0, 2), 0.0);
  EXPECT_NEAR(p.negativity_mass, 1e-6, 1e-18);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(p.a.col(j).sum(), 1.0, 1e-12);
  EXPECT_GE(p.a.minCoeff(), 0.0);
}

TEST(Projection, Idempotent) {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> g(0.2, 0.5);
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + k % 6;
    Matrix x(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) x(i, j) = g(rng);
    const auto once = project_column_stochastic(x);
    const auto twice = project_column_stochastic(once.a);
    EXPECT_LT((once.a - twice.a).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(twice.negativity_mass, 0.0);
    EXPECT_LT((once.a.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
    EXPECT_GE(once.a.minCoeff(), 0.0);
  }
  Matrix neg = -Matrix::Ones(3, 3);
  const auto u = project_column_stochastic(neg);
  EXPECT_NEAR(u.a(0, 0), 1.0 / 3.0, 1e-15);
}

TEST(Learn, TooShort) {
  const auto h = example_model();
  const std::vector<double> y{0.0, 1.0, 2.0};
  EXPECT_THROW(learn(y, h.unique_emissions(), stationary(h).pi_merged), ValidationError);
}

TEST(Learn, PopulationEndToEndPaper) {
  const auto h = example_model();
  const auto rep = learn_from_moments(population_moments(h));
  ASSERT_TRUE(rep.detection.aliased);
  ASSERT_TRUE(rep.identification);
  EXPECT_EQ(rep.identification->index, 2);
  EXPECT_LT(swap_error(rep.a_hat, h.transition()), 1e-16);
  EXPECT_LE(rep.gamma_hat, 2.0 / rep.detection.sigma_hat);
  EXPECT_GT(rep.gamma_hat, 0.0);
}

TEST(Learn, PopulationEndToEndRandomIdentifiable) {
  std::mt19937_64 rng(71);
  int tested = 0;
  for (int k = 0; k < 400 && tested < 30; ++k) {
    const auto h = oracle::random_aliased_model(3 + k % 4, 0.45, rng);
    if (!analyze(h).identifiable) continue;
    ++tested;
    const auto rep = learn_from_moments(population_moments(h));
    ASSERT_TRUE(rep.identification);
    EXPECT_EQ(rep.identification->index, h.n() - 2);
    EXPECT_LT(std::sqrt(swap_error(rep.a_hat, h.transition())), 1e-8) << "model " << k << "\n" << h.transition();
  }
  EXPECT_GE(tested, 10);
}

TEST(Learn, NonAliasedBranchOnMergedModel) {
  const auto hbar = merged_model(example_model());
  const auto pi = stationary(hbar).pi_merged;
  std::vector<double> errs;
  for (int r = 0; r < 20; ++r) {
    const auto y = simulate(hbar, 100000, derive_seed(5, r)).outputs;
    const auto rep = learn(y, hbar.unique_emissions(), pi);
    EXPECT_FALSE(rep.detection.aliased);
    EXPECT_EQ(rep.a_hat.rows(), 3);
    errs.push_back((rep.a_hat - hbar.transition()).norm());
  }
  EXPECT_LT(median(errs), 0.05);
}

TEST(Learn, AliasedBranchReportComplete) {
  const auto h = example_model();
  const auto y = simulate(h, 100000, 12).outputs;
  const auto rep = learn(y, h.unique_emissions(), stationary(h).pi_merged);
  ASSERT_TRUE(rep.detection.aliased);
  ASSERT_TRUE(rep.identification);
  EXPECT_EQ(rep.a_hat.rows(), 4);
  EXPECT_EQ(rep.state_components.size(), 4u);
  EXPECT_EQ(rep.state_components[2], rep.state_components[3]);
  EXPECT_LT((rep.a_hat.colwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GE(rep.a_hat.minCoeff(), 0.0);
  EXPECT_GE(rep.beta_hat, 0.0);
  EXPECT_LE(rep.beta_hat, 1.0);
  EXPECT_GT(rep.gamma_hat, 0.0);
  EXPECT_LE(rep.gamma_hat, 2.0 / rep.detection.sigma_hat + 1e-12);
  EXPECT_GT(rep.timing.total_ms, 0.0);
  const auto model = to_model(rep, h.unique_emissions());
  EXPECT_TRUE(model.is_aliased());
}
