#pragma once

// Baum-Welch for Gaussian-emission HMMs and EM for mixture weights with
// known components.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahmm/hmm.hpp"

namespace ahmm {

enum class BwInit {
  Random,          // Dirichlet(1) columns, means from random outputs, global variance
  FromModel,       // start at a given model
  ExactEmissions,  // random transitions, emissions fixed to the given ones
};

struct BwConfig {
  int iterations = 20;
  BwInit init = BwInit::Random;
  std::uint64_t seed = 0;
  /// Starting model for FromModel; emissions for ExactEmissions.
  std::optional<Hmm> model;
  /// Keep emissions fixed during the M-step (implied by ExactEmissions).
  bool freeze_emissions = false;
  double variance_floor = 1e-4;
};

struct BwResult {
  Hmm model;
  /// Log-likelihood of the starting model followed by one entry per iteration.
  std::vector<double> loglik;
  bool variance_floor_hit = false;
};

/// Throws ValidationError on bad config or T < n, NumericalError when a
/// scaling factor underflows.
BwResult baum_welch(std::span<const double> y, int n, const BwConfig& cfg = {});

/// Log-likelihood of y under h by the scaled forward recursion.
double log_likelihood(const Hmm& h, std::span<const double> y);

std::string bw_trace_csv(const std::vector<double>& loglik);

struct MixtureFit {
  Vector weights;
  std::vector<double> loglik;  // per iteration, including the start
  int iterations = 0;
};

/// EM on the weights of a mixture with fixed components, from uniform weights.
MixtureFit mixture_weights_em(std::span<const double> y, const std::vector<Gaussian>& components,
                              int iterations = 200, double tol = 1e-8);

}  // namespace ahmm
