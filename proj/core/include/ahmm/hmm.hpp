#pragma once

// Parametric-output HMMs with scalar Gaussian emissions.
//
// Transition matrices are column-stochastic: A(i, j) = P(next = i | current = j).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ahmm/common.hpp"

namespace ahmm {

/// Univariate Gaussian output density N(mean, var).
struct Gaussian {
  double mean = 0.0;
  double var = 1.0;

  double density(double y) const;
  /// Largest value the density takes (the bound L on the output densities).
  double peak() const;
  /// <f, g> = integral of f(y) g(y) dy.
  double inner(const Gaussian& other) const;

  template <class Rng>
  double sample(Rng& rng) const {
    std::normal_distribution<double> dist(mean, std::sqrt(var));
    return dist(rng);
  }

  bool operator==(const Gaussian&) const = default;
};

using EmissionParam = Gaussian;

double density(const Gaussian& e, double y);

/// |mu_i - mu_j| / sqrt(var_i + var_j).
double separation(const Gaussian& a, const Gaussian& b);

// Pairs closer than this (in separation units) trigger a warning.
inline constexpr double kMinSeparationWarning = 0.05;

class Hmm {
 public:
  /// Throws ValidationError on dimension mismatch or an inconsistent
  /// aliased_pair. Stochasticity and ergodicity are checked by validate().
  Hmm(Matrix transition, std::vector<Gaussian> emissions,
      std::optional<Vector> initial = std::nullopt,
      std::optional<std::pair<int, int>> aliased_pair = std::nullopt);

  int n() const { return static_cast<int>(emissions_.size()); }
  const Matrix& transition() const { return transition_; }
  const std::vector<Gaussian>& emissions() const { return emissions_; }
  const std::optional<Vector>& initial() const { return initial_; }

  /// 0-based (first < second) indices of the two states sharing an emission.
  const std::optional<std::pair<int, int>>& aliased_pair() const { return aliased_; }
  bool is_aliased() const { return aliased_.has_value(); }
  /// True when the aliased pair occupies the last two indices.
  bool is_canonical() const;

  /// The n-1 distinct emissions (or all n when not aliased), ordered as the
  /// non-aliased states in index order followed by the aliased component.
  std::vector<Gaussian> unique_emissions() const;

  Hmm with_initial(std::optional<Vector> initial) const;

 private:
  Matrix transition_;
  std::vector<Gaussian> emissions_;
  std::optional<Vector> initial_;
  std::optional<std::pair<int, int>> aliased_;
};

/// `order[k]` is the original index of the state placed at position k.
Hmm permute(const Hmm& h, const std::vector<int>& order);

struct CanonicalHmm {
  Hmm model;
  std::vector<int> order;
};

/// Moves the aliased pair to positions (n-2, n-1), keeping every other
/// state in its original relative order.
CanonicalHmm canonicalize(const Hmm& h);

enum class ViolationKind {
  Dimension,
  EntryRange,
  ColumnSum,
  Reducible,
  Periodic,
  InitialDistribution,
  NonPositiveVariance,
  EmissionCoincidence,
};

std::string to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

ValidationReport validate(const Hmm& h);

/// Strong connectivity of the graph with an edge j -> i whenever A(i, j) > 0.
bool is_irreducible(const Matrix& a);
/// Period of an irreducible chain (1 means aperiodic).
int period(const Matrix& a);

struct StationaryInfo {
  Vector pi;
  /// pi[first] / (pi[first] + pi[second]) for the aliased pair.
  std::optional<double> beta;
  /// Stationary masses of the unique components, ordered as unique_emissions().
  Vector pi_merged;
};

/// Unique stationary vector of an irreducible column-stochastic matrix,
/// from a dense solve with one balance equation replaced by normalization.
Vector stationary_distribution(const Matrix& a);

/// Throws ValidationError when the chain is reducible.
StationaryInfo stationary(const Hmm& h);

struct Trajectory {
  std::vector<int> states;  // 0-based
  std::vector<double> outputs;
};

/// Draws T steps. The start state comes from h.initial() when set, else from
/// the stationary distribution. Same seed, same trajectory.
Trajectory simulate(const Hmm& h, std::size_t length, std::uint64_t seed);

}  // namespace ahmm
