#include "ahmm/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ahmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entries within this distance of 0 or 1 (but outside kZeroTol) are flagged.
constexpr double kFragileTol = 1e-8;

void require_canonical_square(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 3)
    throw ValidationError("structure analysis needs a square matrix with n >= 3");
}

}  // namespace

MinimalityVerdict is_minimal(const Hmm& h, const std::optional<Vector>& initial) {
  if (!h.is_aliased()) throw ValidationError("minimality test requires a 2-aliased model");
  const auto canon = canonicalize(h);
  const Matrix& a = canon.model.transition();
  const int n = canon.model.n();
  const auto st = stationary(canon.model);
  const double beta = *st.beta;
  const auto d = decompose(a, beta);

  MinimalityVerdict v;
  v.delta_out_norm = d.delta_out.lpNorm<Eigen::Infinity>();
  v.delta_in_norm = d.delta_in.lpNorm<Eigen::Infinity>();

  std::optional<Vector> start = initial ? initial : h.initial();
  v.start_case = StartCase::StationarySplit;
  if (start) {
    if (start->size() != n) throw ValidationError("initial distribution has wrong length");
    const double p_hi = (*start)(canon.order[n - 2]);
    const double p_lo = (*start)(canon.order[n - 1]);
    const double mass = p_hi + p_lo;
    if (mass > kZeroTol && std::abs(p_hi / mass - beta) > kMinimalityTol)
      v.start_case = StartCase::DistinctSplit;
  }

  const bool out_zero = v.delta_out_norm < kMinimalityTol;
  const bool in_zero = v.delta_in_norm < kMinimalityTol;
  if (out_zero) {
    v.failed = "delta_out";
  } else if (v.start_case == StartCase::StationarySplit && in_zero) {
    v.failed = "delta_in";
  }
  v.minimal = v.failed.empty();
  return v;
}

Matrix similarity_transform(const Matrix& a, double tau_hi, double tau_lo) {
  require_canonical_square(a);
  if (!(tau_hi > tau_lo)) throw ValidationError("similarity transform needs tau_hi > tau_lo");
  const auto n = a.rows();
  const auto p = n - 2;
  const auto q = n - 1;
  Matrix s = Matrix::Identity(n, n);
  s(p, p) = tau_hi;
  s(p, q) = tau_lo;
  s(q, p) = 1.0 - tau_hi;
  s(q, q) = 1.0 - tau_lo;
  const double det = tau_hi - tau_lo;
  Matrix s_inv = Matrix::Identity(n, n);
  s_inv(p, p) = (1.0 - tau_lo) / det;
  s_inv(p, q) = -tau_lo / det;
  s_inv(q, p) = (tau_hi - 1.0) / det;
  s_inv(q, q) = tau_hi / det;
  return s_inv * a * s;
}

bool orient_aliased(Matrix& a) {
  const auto n = a.rows();
  const double into_hi = a(n - 2, n - 2) + a(n - 1, n - 2);
  const double into_lo = a(n - 2, n - 1) + a(n - 1, n - 1);
  if (into_hi >= into_lo) return false;
  a.row(n - 2).swap(a.row(n - 1));
  a.col(n - 2).swap(a.col(n - 1));
  return true;
}

std::pair<double, double> FeasibleRegion::slice(double tau_hi) const {
  constexpr std::pair<double, double> empty{1.0, 0.0};
  if (tau_hi < tau_min_hi || tau_hi > tau_max_hi) return empty;
  double lo = tau_max_lo;
  double hi = std::min(tau_min_lo, tau_hi);
  if (!empty_block) {
    if (branch == RegionBranch::Rectangle) {
      if (tau_hi < tau_plus) return empty;
      lo = std::max(lo, tau_minus);
      hi = std::min(hi, tau_plus);
    } else {
      constexpr double eps = 1e-15;
      const double cg = g.c + g.d * tau_hi;
      const double ng = g.a + g.b * tau_hi;
      if (cg > eps) hi = std::min(hi, ng / cg);
      else if (cg < -eps) lo = std::max(lo, ng / cg);
      else if (ng < 0.0) return empty;
      const double df = f.c + f.d * tau_hi;
      const double nf = f.a + f.b * tau_hi;
      if (df > eps) lo = std::max(lo, nf / df);
      else if (df < -eps) hi = std::min(hi, nf / df);
      else if (nf > 0.0) return empty;
    }
  }
  return {lo, hi};
}

bool FeasibleRegion::contains(double tau_hi, double tau_lo, double tol) const {
  if (!(tau_hi > tau_lo)) return false;
  if (tau_hi < tau_min_hi - tol || tau_hi > tau_max_hi + tol) return false;
  if (tau_lo < tau_max_lo - tol || tau_lo > tau_min_lo + tol) return false;
  if (empty_block) return true;
  if (branch == RegionBranch::Rectangle) {
    return tau_hi >= tau_plus - tol && tau_lo >= tau_minus - tol && tau_lo <= tau_plus + tol;
  }
  const double upper = (g.a + g.b * tau_hi) - tau_lo * (g.c + g.d * tau_hi);
  const double lower = tau_lo * (f.c + f.d * tau_hi) - (f.a + f.b * tau_hi);
  return upper >= -tol && lower >= -tol;
}

namespace {

bool slice_nonempty(const FeasibleRegion& r, double tau_hi) {
  const auto [lo, hi] = r.slice(tau_hi);
  return hi - lo >= -1e-12 * std::max(1.0, std::abs(lo));
}

bool decide_singleton(const FeasibleRegion& r) {
  const auto [lo1, hi1] = r.slice(1.0);
  if (hi1 - lo1 > 1e-9) return false;
  // The region is connected and contains (1, 0): if it has any other point,
  // slices just left or right of tau_hi = 1 are non-empty.
  for (double eps = 1e-1; eps >= 1e-9; eps *= 0.1) {
    if (slice_nonempty(r, 1.0 + eps) || slice_nonempty(r, 1.0 - eps)) return false;
  }
  return true;
}

}  // namespace

FeasibleRegion feasible_region(const Matrix& input) {
  require_canonical_square(input);
  const int n = static_cast<int>(input.rows());
  {
    const Vector pi = stationary_distribution(input);
    const double beta = pi(n - 2) / (pi(n - 2) + pi(n - 1));
    const auto d = decompose(input, beta);
    if (d.delta_out.lpNorm<Eigen::Infinity>() < kMinimalityTol ||
        d.delta_in.lpNorm<Eigen::Infinity>() < kMinimalityTol)
      throw ValidationError("feasible region is only characterized for minimal models");
  }

  FeasibleRegion r;
  r.oriented = input;
  r.swapped = orient_aliased(r.oriented);
  const Matrix& a = r.oriented;
  const int p = n - 2;
  const int q = n - 1;

  const Matrix ba = merge_operator(n) * a;
  r.delta_out = ba.col(p) - ba.col(q);
  const Vector alpha = relative_entry(a);
  r.into_hi = ba(n - 2, p);
  r.into_lo = ba(n - 2, q);
  r.alpha_hi = alpha(p);
  r.alpha_lo = alpha(q);

  // Columns of B A_H for the pair are ba(:, q) + tau * delta_out; both must stay >= 0.
  double lower = -kInf;
  double upper = kInf;
  for (int k = 0; k < n - 1; ++k) {
    const double dk = r.delta_out(k);
    if (std::abs(dk) <= kZeroTol) continue;
    const double root = -ba(k, q) / dk;
    if (dk > 0.0) lower = std::max(lower, root);
    else upper = std::min(upper, root);
  }
  r.tau_max_hi = upper;
  r.tau_max_lo = lower;

  // Relative entry probabilities of the non-aliased entry states bound the pair.
  double a_min = kInf;
  double a_max = -kInf;
  for (int j = 0; j < n - 2; ++j) {
    if (a(p, j) + a(q, j) <= kZeroTol) continue;
    a_min = std::min(a_min, alpha(j));
    a_max = std::max(a_max, alpha(j));
  }
  if (a_max == -kInf) {
    r.tau_min_hi = r.tau_max_lo;
    r.tau_min_lo = r.tau_max_hi;
  } else {
    r.tau_min_hi = a_max;
    r.tau_min_lo = a_min;
  }

  const double p1 = r.into_hi;
  const double p2 = r.into_lo;
  const double delta = p1 - p2;
  const double a1 = r.alpha_hi;
  const double a2 = r.alpha_lo;
  r.empty_block = p1 <= kZeroTol;
  r.degenerate = !r.empty_block && delta <= kZeroTol;
  r.branch = a1 >= a2 ? RegionBranch::Rectangle : RegionBranch::Curved;

  const double m = a1 * p1 - a2 * p2;
  r.g = BoundaryCurve{a2 * p2, m, p2, delta};
  r.f = BoundaryCurve{a2 * p2, -p2, -m, delta};

  if (r.empty_block) {
    r.tau_minus = -kInf;
    r.tau_plus = -kInf;
  } else if (r.degenerate) {
    const double denom = 1.0 - (a1 - a2);
    if (denom > kZeroTol) {
      // The off-diagonal quadratic is linear: tau_lo <= tau0 <= tau_hi.
      r.tau_minus = -kInf;
      r.tau_plus = a2 / denom;
    } else {
      // alpha_hi = 1 and alpha_lo = 0: the off-diagonal entries vanish for every tau.
      r.tau_minus = -kInf;
      r.tau_plus = -kInf;
      r.empty_block = true;
    }
  } else {
    const double m0 = a1 * p1 - (1.0 + a2) * p2;
    const double disc = std::max(0.0, m0 * m0 + 4.0 * a2 * p2 * delta);
    r.tau_minus = (m0 - std::sqrt(disc)) / (2.0 * delta);
    r.tau_plus = (m0 + std::sqrt(disc)) / (2.0 * delta);
  }

  r.singleton = decide_singleton(r);
  return r;
}

double GridScan::tau_hi(int k) const {
  return hi_min + (hi_max - hi_min) * static_cast<double>(k) / (resolution - 1);
}

double GridScan::tau_lo(int k) const {
  return lo_min + (lo_max - lo_min) * static_cast<double>(k) / (resolution - 1);
}

GridScan scan_feasibility(const Matrix& a, double hi_min, double hi_max, double lo_min, double lo_max,
                          int resolution, double tol) {
  require_canonical_square(a);
  if (resolution < 2) throw ValidationError("grid resolution must be at least 2");
  GridScan scan{hi_min, hi_max, lo_min, lo_max, resolution, {}};
  scan.feasible.assign(static_cast<std::size_t>(resolution) * resolution, 0);
  for (int il = 0; il < resolution; ++il) {
    const double tl = scan.tau_lo(il);
    for (int ih = 0; ih < resolution; ++ih) {
      const double th = scan.tau_hi(ih);
      if (!(th > tl)) continue;
      const Matrix ah = similarity_transform(a, th, tl);
      scan.feasible[static_cast<std::size_t>(il) * resolution + ih] = ah.minCoeff() >= -tol;
    }
  }
  return scan;
}

GridScan scan_feasibility(const FeasibleRegion& region, int resolution, double tol) {
  return scan_feasibility(region.oriented, region.tau_min_hi - 0.5, region.tau_max_hi + 0.5,
                          region.tau_max_lo - 0.5, region.tau_min_lo + 0.5, resolution, tol);
}

// ---- effective feasible region ------------------------------------------------

std::string to_string(DiagramTable t) {
  switch (t) {
    case DiagramTable::ColumnPair: return "column-pair";
    case DiagramTable::EntryRatio: return "entry-ratio";
    case DiagramTable::BlockAlphaGeq: return "block-alpha-geq";
    case DiagramTable::BlockAlphaLess: return "block-alpha-less";
  }
  return "unknown";
}

std::string to_string(RegionShape s) {
  switch (s) {
    case RegionShape::Full: return "full";
    case RegionShape::HalfPlane: return "half-plane";
    case RegionShape::Quadrant: return "quadrant";
    case RegionShape::Line: return "line";
    case RegionShape::Ray: return "ray";
    case RegionShape::Point: return "point";
  }
  return "unknown";
}

RegionShape classify_cone(const std::vector<HalfPlane>& constraints) {
  if (constraints.empty()) return RegionShape::Full;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto wrap = [two_pi](double t) {
    t = std::fmod(t, two_pi);
    return t < 0.0 ? t + two_pi : t;
  };
  std::vector<double> cuts;
  for (const auto& h : constraints) {
    if (h.a == 0.0 && h.b == 0.0) continue;
    const double t = std::atan2(h.b, h.a);
    cuts.push_back(wrap(t + std::numbers::pi / 2));
    cuts.push_back(wrap(t - std::numbers::pi / 2));
  }
  if (cuts.empty()) return RegionShape::Full;
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double x, double y) { return y - x < 1e-12; }),
             cuts.end());
  if (cuts.size() > 1 && cuts.front() + two_pi - cuts.back() < 1e-12) cuts.pop_back();

  auto feasible = [&](double t) {
    const double c = std::cos(t);
    const double s = std::sin(t);
    return std::all_of(constraints.begin(), constraints.end(),
                       [&](const HalfPlane& h) { return h.a * c + h.b * s >= -1e-9; });
  };

  double arc = 0.0;
  const std::size_t k = cuts.size();
  for (std::size_t i = 0; i < k; ++i) {
    const double start = cuts[i];
    const double end = (i + 1 < k) ? cuts[i + 1] : cuts[0] + two_pi;
    if (feasible(0.5 * (start + end))) arc += end - start;
  }
  if (arc > two_pi - 1e-9) return RegionShape::Full;
  if (std::abs(arc - std::numbers::pi) < 1e-9) return RegionShape::HalfPlane;
  if (arc > 1e-9) return RegionShape::Quadrant;

  std::vector<double> rays;
  for (double t : cuts)
    if (feasible(t)) rays.push_back(t);
  if (rays.empty()) return RegionShape::Point;
  if (rays.size() == 1) return RegionShape::Ray;
  return RegionShape::Line;
}

namespace {

enum class Level { Zero, Mid, One };

Level level_of(double v) {
  if (v <= kZeroTol) return Level::Zero;
  if (v >= 1.0 - kZeroTol) return Level::One;
  return Level::Mid;
}

bool fragile(double v) {
  return (v > kZeroTol && v < kFragileTol) || (v < 1.0 - kZeroTol && v > 1.0 - kFragileTol);
}

constexpr HalfPlane kHiNonNeg{1.0, 0.0};
constexpr HalfPlane kHiNonPos{-1.0, 0.0};
constexpr HalfPlane kLoNonNeg{0.0, 1.0};
constexpr HalfPlane kLoNonPos{0.0, -1.0};
constexpr HalfPlane kSumNonNeg{1.0, 1.0};
constexpr HalfPlane kSumNonPos{-1.0, -1.0};

std::string fmt_entry(const char* name, int i, int j, double v) {
  std::ostringstream os;
  os << name << "(" << i + 1 << "," << j + 1 << ")=" << v;
  return os.str();
}

}  // namespace

EffectiveRegion effective_region(const Matrix& input) {
  require_canonical_square(input);
  const int n = static_cast<int>(input.rows());
  {
    const Vector pi = stationary_distribution(input);
    const double beta = pi(n - 2) / (pi(n - 2) + pi(n - 1));
    const auto d = decompose(input, beta);
    if (d.delta_out.lpNorm<Eigen::Infinity>() < kMinimalityTol ||
        d.delta_in.lpNorm<Eigen::Infinity>() < kMinimalityTol)
      throw ValidationError("effective region is only characterized for minimal models");
  }

  EffectiveRegion out;
  Matrix a = input;
  out.swapped = orient_aliased(a);
  const int p = n - 2;
  const int q = n - 1;
  auto warn_fragile = [&out](double v, const std::string& what) {
    if (fragile(v)) out.warnings.push_back("identifiability is numerically fragile: " + what + " is near 0 or 1");
  };

  // Non-aliased rows against the two aliased columns.
  for (int i = 0; i < n - 2; ++i) {
    const double x_hi = a(i, p);
    const double x_lo = a(i, q);
    warn_fragile(x_hi, fmt_entry("A", i, p, x_hi));
    warn_fragile(x_lo, fmt_entry("A", i, q, x_lo));
    const Level l_hi = level_of(x_hi);
    const Level l_lo = level_of(x_lo);
    if (l_hi == Level::Mid && l_lo == Level::Mid) continue;
    Diagram d{DiagramTable::ColumnPair, i, fmt_entry("A", i, p, x_hi) + ", " + fmt_entry("A", i, q, x_lo), {}};
    if (l_lo == Level::Zero) {
      if (l_hi == Level::Mid) d.constraints = {kLoNonNeg};
      else if (l_hi == Level::One) d.constraints = {kHiNonPos, kLoNonNeg};
    } else if (l_lo == Level::Mid) {
      d.constraints = {kHiNonPos};  // l_hi is Zero or One
    } else {  // l_lo == One
      if (l_hi == Level::Zero) d.constraints = {kHiNonPos, kLoNonNeg};
      else if (l_hi == Level::Mid) d.constraints = {kLoNonNeg};
      else throw ValidationError("aliased columns are identical unit vectors; model is not aliased");
    }
    if (!d.constraints.empty()) out.diagrams.push_back(std::move(d));
  }

  // Relative entry probabilities of the non-aliased entry states.
  const Vector alpha = relative_entry(a);
  for (int j = 0; j < n - 2; ++j) {
    if (a(p, j) + a(q, j) <= kZeroTol) continue;
    warn_fragile(alpha(j), "alpha_" + std::to_string(j + 1));
    const Level l = level_of(alpha(j));
    if (l == Level::Mid) continue;
    std::ostringstream os;
    os << "alpha_" << j + 1 << "=" << alpha(j);
    out.diagrams.push_back({DiagramTable::EntryRatio, j, os.str(),
                            {l == Level::Zero ? kLoNonPos : kHiNonNeg}});
  }

  // The aliased 2x2 block.
  const double a_hh = a(p, p);
  const double a_ll = a(q, q);
  const double a_hl = a(p, q);  // P(n-1 | n)
  const double into_hi = a(p, p) + a(q, p);
  auto near_tie = [&out](double u, double v, const std::string& what) {
    const double gap = std::abs(u - v);
    if (gap > kZeroTol && gap < kFragileTol)
      out.warnings.push_back("identifiability is numerically fragile: near tie " + what);
  };
  if (alpha(p) >= alpha(q)) {
    near_tie(alpha(p), alpha(q), "alpha_hi vs alpha_lo");
    near_tie(a_hh, a_ll, "A(n-1,n-1) vs A(n,n)");
    near_tie(a_hh, into_hi, "A(n-1,n-1) vs P(nb|n-1)");
    const bool row_zero = a_hl <= kZeroTol;
    const bool eq_diag = std::abs(a_hh - a_ll) <= kZeroTol;
    const bool eq_into = std::abs(a_hh - into_hi) <= kZeroTol;
    Diagram d{DiagramTable::BlockAlphaGeq, -1, "", {}};
    std::ostringstream os;
    os << "A(n-1,n)=" << a_hl << ", A(n-1,n-1)=" << a_hh << ", A(n,n)=" << a_ll
       << ", P(nb|n-1)=" << into_hi;
    d.trigger = os.str();
    if (row_zero && eq_diag && eq_into) {
      // Both off-diagonal entries vanish with equal exits: the block constrains nothing.
      out.warnings.push_back("aliased block is diagonal with equal exit mass; no block constraint");
    } else if (eq_into) {
      d.constraints = row_zero ? std::vector{kHiNonNeg, kLoNonNeg} : std::vector{kHiNonNeg};
    } else if (eq_diag) {
      if (row_zero) d.constraints = {kLoNonNeg, kLoNonPos};
    } else if (a_hh < a_ll) {
      if (row_zero) d.constraints = {kLoNonPos};
    } else if (row_zero) {
      d.constraints = {kLoNonNeg};
    }
    if (!d.constraints.empty()) out.diagrams.push_back(std::move(d));
  } else {
    near_tie(alpha(p), alpha(q), "alpha_hi vs alpha_lo");
    warn_fragile(a_hh, "A(n-1,n-1)");
    warn_fragile(a_ll, "A(n,n)");
    const bool hh_zero = a_hh <= kZeroTol;
    const bool ll_zero = a_ll <= kZeroTol;
    Diagram d{DiagramTable::BlockAlphaLess, -1, "", {}};
    std::ostringstream os;
    os << "A(n-1,n-1)=" << a_hh << ", A(n,n)=" << a_ll;
    d.trigger = os.str();
    if (ll_zero && hh_zero) d.constraints = {kSumNonNeg, kSumNonPos};
    else if (ll_zero) d.constraints = {kSumNonNeg};
    else if (hh_zero) d.constraints = {kSumNonPos};
    if (!d.constraints.empty()) out.diagrams.push_back(std::move(d));
  }

  std::vector<HalfPlane> all;
  for (const auto& d : out.diagrams) all.insert(all.end(), d.constraints.begin(), d.constraints.end());
  out.shape = classify_cone(all);
  out.identifiable = out.shape == RegionShape::Point;
  return out;
}

AnalysisReport analyze(const Hmm& h) {
  AnalysisReport rep;
  rep.validation = validate(h);
  const auto canon = canonicalize(h);
  rep.order = canon.order;
  if (!rep.validation.ok()) {
    rep.notes.push_back("model failed validation; structure analysis skipped");
    return rep;
  }
  if (!h.is_aliased()) {
    rep.identifiable = true;
    rep.notes.push_back("no aliased pair: a non-aliased model meeting the assumptions is minimal and identifiable");
    return rep;
  }
  const Matrix& a = canon.model.transition();
  const auto st = stationary(canon.model);
  rep.decomposition = decompose(a, *st.beta);
  rep.minimality = is_minimal(h);
  if (!rep.minimality->minimal) {
    rep.notes.push_back("model is not minimal (" + rep.minimality->failed +
                        " vanishes); feasible region not characterized");
    return rep;
  }
  if (rep.minimality->start_case == StartCase::DistinctSplit)
    rep.notes.push_back("non-stationary start: identifiability analysis assumes the stationary case");
  if (rep.decomposition->delta_in.lpNorm<Eigen::Infinity>() < kMinimalityTol) {
    rep.notes.push_back("delta_in vanishes; feasible region not characterized");
    return rep;
  }
  rep.region = feasible_region(a);
  rep.effective = effective_region(a);
  rep.identifiable = rep.effective->identifiable;
  if (rep.region->singleton != rep.effective->identifiable)
    rep.notes.push_back("diagram intersection and region probe disagree; diagram verdict reported");
  if (rep.region->swapped) rep.notes.push_back("aliased labels swapped so that P(nb|n-1) >= P(nb|n)");
  return rep;
}

}  // namespace ahmm
