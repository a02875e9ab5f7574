#pragma once

// Minimality and identifiability of 2-aliased HMMs.
//
// Equivalent models are parametrized by (tau_hi, tau_lo), the lower-right
// block of the similarity transform S(tau_hi, tau_lo); (1, 0) is the model
// itself. The feasible region is the set of parameters with S^-1 A S >= 0 and
// tau_hi > tau_lo. A minimal model is identifiable iff that set is {(1, 0)}.

#include <optional>
#include <string>
#include <vector>

#include "ahmm/alias_decomp.hpp"
#include "ahmm/hmm.hpp"

namespace ahmm {

enum class StartCase {
  // Initial mass on the aliased pair, split differently from the stationary beta.
  DistinctSplit,
  // No initial mass on the pair, or the stationary split (includes a stationary start).
  StationarySplit,
};

struct MinimalityVerdict {
  bool minimal = false;
  StartCase start_case = StartCase::StationarySplit;
  double delta_out_norm = 0.0;  // infinity norm
  double delta_in_norm = 0.0;
  /// "delta_out", "delta_in", or empty when minimal.
  std::string failed;
};

// Norms below this count as zero vectors.
inline constexpr double kMinimalityTol = 1e-12;

/// `initial` overrides h.initial(); with neither, the start is stationary.
/// Throws ValidationError if h has no aliased pair or a reducible chain.
MinimalityVerdict is_minimal(const Hmm& h, const std::optional<Vector>& initial = std::nullopt);

/// S(tau_hi, tau_lo)^-1 A S(tau_hi, tau_lo) for canonical A. Columns of the
/// result sum to one; entries may be negative. Requires tau_hi > tau_lo.
Matrix similarity_transform(const Matrix& a, double tau_hi, double tau_lo);

/// A boundary curve tau_lo = (a + b tau) / (c + d tau).
struct BoundaryCurve {
  double a = 0.0, b = 0.0, c = 1.0, d = 0.0;
  double operator()(double tau) const { return (a + b * tau) / (c + d * tau); }
};

enum class RegionBranch {
  // alpha_hi >= alpha_lo: feasible set is the rectangle intersection Gamma1 n Gamma2.
  Rectangle,
  // alpha_hi < alpha_lo: Gamma1 n Gamma3, bounded by the curves f <= tau_lo <= g.
  Curved,
};

struct FeasibleRegion {
  /// The aliased labels were swapped so that P(nb | n-1) >= P(nb | n).
  bool swapped = false;
  Matrix oriented;  // the analysed matrix, after the optional swap

  double into_hi = 0.0;  // P(nb | n-1)
  double into_lo = 0.0;  // P(nb | n)
  double alpha_hi = 0.0;
  double alpha_lo = 0.0;
  Vector delta_out;

  // Gamma1 = [tau_min_hi, tau_max_hi] x [tau_max_lo, tau_min_lo]
  double tau_min_hi = 0.0;
  double tau_max_hi = 0.0;
  double tau_min_lo = 0.0;
  double tau_max_lo = 0.0;

  RegionBranch branch = RegionBranch::Rectangle;
  /// delta_out of the merged coordinate vanishes (P(nb|n-1) = P(nb|n)).
  bool degenerate = false;
  /// P(nb|n-1) = P(nb|n) = 0: the aliased block imposes nothing.
  bool empty_block = false;

  // Roots of the off-diagonal quadratic. In the degenerate case it is linear:
  // tau_plus = tau0 and tau_minus = -inf. Infinite when the constraint is vacuous.
  double tau_minus = 0.0;
  double tau_plus = 0.0;

  BoundaryCurve g;  // upper boundary of Gamma3 (diagonal entry n-1 vanishes)
  BoundaryCurve f;  // lower boundary of Gamma3 (diagonal entry n vanishes)

  bool singleton = false;

  /// Closed-form membership test; `tol` absorbs rounding at the boundary.
  bool contains(double tau_hi, double tau_lo, double tol = 1e-10) const;

  /// Feasible tau_lo for a given tau_hi, as [lo, hi]; lo > hi means empty.
  std::pair<double, double> slice(double tau_hi) const;
};

/// Requires canonical A of a minimal model; throws ValidationError otherwise.
FeasibleRegion feasible_region(const Matrix& a);

/// Brute-force classification on an N x N grid (row-major, tau_hi fastest).
struct GridScan {
  double hi_min = 0.0, hi_max = 0.0, lo_min = 0.0, lo_max = 0.0;
  int resolution = 0;
  std::vector<char> feasible;

  double tau_hi(int k) const;
  double tau_lo(int k) const;
  bool at(int i_hi, int i_lo) const { return feasible[static_cast<std::size_t>(i_lo) * resolution + i_hi]; }
};

GridScan scan_feasibility(const Matrix& a, double hi_min, double hi_max, double lo_min, double lo_max,
                          int resolution = 400, double tol = 1e-10);

/// Default scan box around the analytic rectangle.
GridScan scan_feasibility(const FeasibleRegion& region, int resolution = 400, double tol = 1e-10);

// ---- effective feasible region ------------------------------------------------

/// a * d_hi + b * d_lo >= 0, with (d_hi, d_lo) the offset from (1, 0).
struct HalfPlane {
  double a = 0.0;
  double b = 0.0;
};

enum class DiagramTable {
  ColumnPair,      // non-aliased row i, columns of the aliased pair
  EntryRatio,      // alpha_j of a state entering the pair
  BlockAlphaGeq,   // aliased block when alpha_hi >= alpha_lo
  BlockAlphaLess,  // aliased block when alpha_hi < alpha_lo
};

std::string to_string(DiagramTable t);

struct Diagram {
  DiagramTable table;
  int state = -1;  // 0-based row/column that triggered it, -1 for the block
  std::string trigger;
  std::vector<HalfPlane> constraints;  // empty means the whole plane
};

enum class RegionShape { Full, HalfPlane, Quadrant, Line, Ray, Point };

std::string to_string(RegionShape s);

/// Local shape of the intersection of half-planes through the origin.
RegionShape classify_cone(const std::vector<HalfPlane>& constraints);

struct EffectiveRegion {
  bool swapped = false;
  std::vector<Diagram> diagrams;
  RegionShape shape = RegionShape::Full;
  bool identifiable = false;
  std::vector<std::string> warnings;
};

/// Collects one diagram per triggering structural zero/one of A and intersects
/// them. Diagrams that leave the whole plane feasible are not listed.
EffectiveRegion effective_region(const Matrix& a);

/// Swaps the aliased labels when P(nb|n-1) < P(nb|n). Returns whether it swapped.
bool orient_aliased(Matrix& a);

struct AnalysisReport {
  ValidationReport validation;
  std::vector<int> order;  // canonical position -> original state
  std::optional<MinimalityVerdict> minimality;
  std::optional<AliasDecomposition> decomposition;
  std::optional<FeasibleRegion> region;
  std::optional<EffectiveRegion> effective;
  bool identifiable = false;
  std::vector<std::string> notes;
};

AnalysisReport analyze(const Hmm& h);

}  // namespace ahmm
