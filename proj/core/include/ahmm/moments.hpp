#pragma once

// Second and third order output moments.
//
// Index convention: with f_i the density of unique component i,
//   Mcal(t)(i, j) = E[f_i(Y_t) f_j(Y_0)]
//   Gcal(c)(i, j) = E[f_i(Y_2) f_c(Y_1) f_j(Y_0)]
// so that Mcal(t) = K B A^t C_beta diag(pibar) K holds as written and the
// kernel-free M(1) equals the merged transition matrix itself.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ahmm/alias_decomp.hpp"
#include "ahmm/hmm.hpp"

namespace ahmm {

struct Kernel {
  Matrix k;              // (n-1) x (n-1) Gram matrix of the unique densities
  double condition = 0;  // 2-norm condition number
  std::vector<std::string> warnings;

  /// B^T K B for an aliased model with n = k.rows() + 1 states.
  Matrix lifted() const;
};

// Condition numbers above this trigger a warning.
inline constexpr double kKernelConditionWarning = 1e8;

/// Throws ValidationError on coincident parameters and NumericalError if the
/// Cholesky factorization fails.
Kernel kernel(const std::vector<Gaussian>& unique_emissions);

enum class Provenance { Population, Empirical };

struct MomentSet {
  Provenance provenance = Provenance::Population;
  std::size_t length = 0;  // T for empirical moments
  Matrix kernel;
  Vector pi_merged;

  std::array<Matrix, 3> raw_m;  // Mcal(1..3)
  std::vector<Matrix> raw_g;    // Gcal(c), one per component

  std::array<Matrix, 3> m;      // kernel-free M(1..3)
  std::vector<Matrix> g;        // kernel-free G(c)

  Matrix dm2;
  Matrix dm3;
  std::vector<Matrix> dg;

  int components() const { return static_cast<int>(kernel.rows()); }
};

/// Fills m, g, dm2, dm3 and dg from raw_m, raw_g, kernel and pi_merged.
void derive(MomentSet& s);

/// Closed forms for an aliased model (canonicalized internally) or, when h
/// has no aliased pair, with B and C_beta replaced by the identity.
/// Components follow h.unique_emissions() after canonicalization.
MomentSet population_moments(const Hmm& h);

/// Single-pass accumulator of lagged products of the component densities.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::vector<Gaussian> unique_emissions);

  void push(double y);
  std::size_t count() const { return count_; }

  /// Normalized Mcal(t); requires count() > t.
  Matrix lagged(int t) const;
  /// Normalized Gcal(c); requires count() > 2.
  Matrix triple(int c) const;

 private:
  std::vector<Gaussian> emissions_;
  std::size_t count_ = 0;
  std::array<Vector, 3> history_;  // densities at the last three points, newest first
  std::array<Matrix, 3> lag_sum_;
  std::vector<Matrix> triple_sum_;
};

/// Requires y.size() >= 4 and pi_merged > 0.
MomentSet empirical_moments(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                            const Vector& pi_merged, const Kernel& k);

MomentSet empirical_moments(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                            const Vector& pi_merged);

}  // namespace ahmm
