#pragma once

// Learning a possibly 2-aliased HMM from one output sequence with known
// emission components and merged stationary weights.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahmm/moments.hpp"

namespace ahmm {

struct DetectionConfig {
  double c_h = 2.0;
  double exponent = 1.0 / 3.0;
};

/// h_T = c_h * T^(-exponent).
double detection_threshold(std::size_t length, const DetectionConfig& cfg = {});

struct DetectionResult {
  double sigma_hat = 0.0;     // largest singular value of dM2
  double sigma_second = 0.0;  // second singular value, a rank diagnostic
  double threshold = 0.0;
  bool aliased = false;
  Vector u_hat;
  Vector v_hat;
};

// Population moments carry no length; their rank test uses this threshold.
inline constexpr double kPopulationDetectionThreshold = 1e-10;

/// Threshold from m.length (population moments use kPopulationDetectionThreshold).
DetectionResult detect(const MomentSet& m, const DetectionConfig& cfg = {});
DetectionResult detect(const MomentSet& m, std::size_t length, const DetectionConfig& cfg);

struct ComponentScores {
  int index = -1;  // 0-based component
  Vector scores;
  std::vector<std::string> warnings;
};

/// argmin_i sum_c ||dG(c) - K(i, c) dM2||_F^2.
ComponentScores identify_component(const MomentSet& m);

/// <dM3, dM2>_F / ||dM2||_F^2. Throws NumericalError when dM2 vanishes.
double estimate_kappa(const Matrix& dm3, const Matrix& dm2);
double estimate_kappa(const MomentSet& m);

/// Inputs of the reparametrized decomposition, with the aliased component last.
struct AliasedFactors {
  Matrix merged;  // estimate of the merged matrix (n-1) x (n-1)
  double kappa = 0.0;
  double sigma = 0.0;
  Vector u;
  Vector v;
};

/// gamma' A'_H(gamma', beta') before projection.
Matrix scaled_candidate(const AliasedFactors& f, double gamma, double beta);

/// h(gamma', beta') = min over entries of gamma' A'_H(gamma', beta').
double gamma_beta_objective(const AliasedFactors& f, double gamma, double beta);

struct GammaBetaConfig {
  int grid = 200;
  int simplex_iterations = 200;
  double simplex_tol = 1e-8;
  double gamma_floor_ratio = 1e-3;  // gamma' >= ratio * sigma
  bool polish = true;               // successive linear programming after the simplex stage
};

struct GammaBetaEstimate {
  double gamma = 0.0;
  double beta = 0.0;
  double objective = 0.0;
  bool flipped = false;  // (-u, -v) won
};

/// Maximizes h over [ratio * sigma, 2 / sigma] x [0, 1] for both sign pairs.
GammaBetaEstimate estimate_gamma_beta(const AliasedFactors& f, const GammaBetaConfig& cfg = {});

struct Projection {
  Matrix a;
  double negativity_mass = 0.0;  // sum of clipped negative entries, as a positive number
};

/// Clips negatives to zero and renormalizes each column. A column with no
/// positive mass becomes uniform.
Projection project_column_stochastic(const Matrix& x);

/// Four-term assembly C_b Abar B + g C_b u c_b^T + (s/g) b v^T B + k b c_b^T,
/// followed by projection. Throws ValidationError when gamma <= 0.
Projection assemble(const AliasedFactors& f, double gamma, double beta);

struct LearnConfig {
  DetectionConfig detection;
  GammaBetaConfig gamma_beta;
};

struct LearnTiming {
  double moments_ms = 0.0;
  double detect_ms = 0.0;
  double identify_ms = 0.0;
  double optimize_ms = 0.0;
  double assemble_ms = 0.0;
  double total_ms = 0.0;
};

struct LearnReport {
  DetectionResult detection;
  std::optional<ComponentScores> identification;
  double kappa_hat = 0.0;
  double gamma_hat = 0.0;
  double beta_hat = 0.0;
  double objective = 0.0;
  bool flipped = false;
  /// Column-stochastic estimate. n x n in the aliased branch, (n-1) x (n-1) otherwise.
  Matrix a_hat;
  /// 0-based component index emitted by each state of a_hat.
  std::vector<int> state_components;
  double negativity_mass = 0.0;
  LearnTiming timing;
  std::vector<std::string> warnings;
};

/// Pipeline from precomputed moments.
LearnReport learn_from_moments(const MomentSet& m, const LearnConfig& cfg = {});

/// Full pipeline on an output sequence. Requires y.size() >= 4.
LearnReport learn(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                  const Vector& pi_merged, const LearnConfig& cfg = {});

/// The learned HMM, with state s emitting unique_emissions[rep.state_components[s]].
Hmm to_model(const LearnReport& rep, const std::vector<Gaussian>& unique_emissions);

}  // namespace ahmm
