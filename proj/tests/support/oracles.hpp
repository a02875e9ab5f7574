#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library code they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "ahmm/hmm.hpp"

namespace ahmm::oracle {

/// Stationary vector by power iteration on the column-stochastic matrix.
inline Vector power_iteration(const Matrix& a, int steps = 10000) {
  const auto n = a.rows();
  Vector p = Vector::Constant(n, 1.0 / static_cast<double>(n));
  // Lazy chain (A + I) / 2 has the same fixed point and converges for periodic A too.
  const Matrix lazy = 0.5 * (a + Matrix::Identity(n, n));
  for (int k = 0; k < steps; ++k) p = lazy * p;
  return p / p.sum();
}

/// Adaptive Simpson quadrature on [lo, hi].
inline double integrate(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12,
                        int depth = 50) {
  std::function<double(double, double, double, double, double, double, int)> rec =
      [&](double a, double b, double fa, double fm, double fb, double whole, int d) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m);
        const double rm = 0.5 * (m + b);
        const double flm = f(lm);
        const double frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
        return rec(a, m, fa, flm, fm, left, d - 1) + rec(m, b, fm, frm, fb, right, d - 1);
      };
  // Split into panels so narrow peaks are not skipped by the first estimate.
  const int panels = 64;
  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double a = lo + (hi - lo) * k / panels;
    const double b = lo + (hi - lo) * (k + 1) / panels;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    total += rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), depth);
  }
  return total;
}

inline double normal_pdf(double y, double mean, double var) {
  return std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Golden-section minimization of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Lagged density products computed from stored density vectors, two passes.
struct NaiveMoments {
  std::vector<Matrix> lag;     // lag 1..3
  std::vector<Matrix> triple;  // per component c
};

inline NaiveMoments naive_moments(const std::vector<double>& y, const std::vector<Gaussian>& em) {
  const int m = static_cast<int>(em.size());
  const std::size_t len = y.size();
  std::vector<Vector> f(len, Vector(m));
  for (std::size_t t = 0; t < len; ++t)
    for (int i = 0; i < m; ++i) f[t](i) = normal_pdf(y[t], em[i].mean, em[i].var);
  NaiveMoments out;
  for (std::size_t lag = 1; lag <= 3; ++lag) {
    Matrix s = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l + lag < len; ++l) acc += f[l + lag](i) * f[l](j);
        s(i, j) = acc / static_cast<double>(len - lag);
      }
    out.lag.push_back(s);
  }
  for (int c = 0; c < m; ++c) {
    Matrix s = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t l = 0; l + 2 < len; ++l) acc += f[l + 2](i) * f[l + 1](c) * f[l](j);
        s(i, j) = acc / static_cast<double>(len - 2);
      }
    out.triple.push_back(s);
  }
  return out;
}

/// Strong connectivity by Floyd-Warshall style closure.
inline bool reachable_all(const Matrix& a) {
  const auto n = a.rows();
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> r(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = i == j || a(i, j) > 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) r(i, j) = r(i, j) || (r(i, k) && r(k, j));
  return r.all();
}

/// Aperiodic and irreducible: some power of A is strictly positive.
inline bool primitive(const Matrix& a) {
  const auto n = a.rows();
  Matrix p = Matrix::Identity(n, n);
  Matrix pattern = (a.array() > 0.0).cast<double>().matrix();
  const int bound = static_cast<int>(n * n - 2 * n + 2);
  for (int k = 0; k < std::max(bound, 1); ++k) p = ((p * pattern).array() > 0.0).cast<double>().matrix();
  return (p.array() > 0.0).all();
}

/// Random column-stochastic n x n matrix; each entry is zero with probability p_zero.
inline Matrix random_stochastic(int n, double p_zero, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix a(n, n);
  for (int j = 0; j < n; ++j) {
    do {
      for (int i = 0; i < n; ++i) a(i, j) = u(rng) < p_zero ? 0.0 : u(rng) + 0.05;
    } while (a.col(j).sum() <= 0.0);
    a.col(j) /= a.col(j).sum();
  }
  return a;
}

/// Stationary-start minimality straight from the entries of A: the aliased
/// columns differ after merging, and some entry split differs from beta.
inline bool minimal_2aliased(const Matrix& a) {
  const auto n = a.rows();
  Vector pi = power_iteration(a, 20000);
  const double beta = pi(n - 2) / (pi(n - 2) + pi(n - 1));
  // delta_out: aliased columns after summing the aliased rows.
  double out = 0.0;
  for (Eigen::Index i = 0; i < n - 2; ++i) out = std::max(out, std::abs(a(i, n - 2) - a(i, n - 1)));
  out = std::max(out, std::abs(a(n - 2, n - 2) + a(n - 1, n - 2) - a(n - 2, n - 1) - a(n - 1, n - 1)));
  // delta_in: P(n-1 | j) - beta P(nb | j) over non-aliased j, plus the block combination.
  double in = 0.0;
  for (Eigen::Index j = 0; j < n - 2; ++j) in = std::max(in, std::abs(a(n - 2, j) - beta * (a(n - 2, j) + a(n - 1, j))));
  const double blk = beta * (a(n - 2, n - 2) - beta * (a(n - 2, n - 2) + a(n - 1, n - 2))) +
                     (1.0 - beta) * (a(n - 2, n - 1) - beta * (a(n - 2, n - 1) + a(n - 1, n - 1)));
  in = std::max(in, std::abs(blk));
  return out > 1e-6 && in > 1e-6;
}

/// Canonical 2-aliased model with distinct unit-variance components.
inline Hmm random_aliased_model(int n, double p_zero, std::mt19937_64& rng) {
  for (;;) {
    Matrix a = random_stochastic(n, p_zero, rng);
    if (!reachable_all(a) || !primitive(a) || !minimal_2aliased(a)) continue;
    std::vector<Gaussian> em;
    for (int i = 0; i < n - 1; ++i) em.push_back({2.5 * i, 1.0});
    em.push_back(em.back());
    return Hmm(a, em, std::nullopt, std::pair{n - 2, n - 1});
  }
}

/// S^-1 A S with S the identity except for the aliased block
/// [[tau_hi, tau_lo], [1 - tau_hi, 1 - tau_lo]], inverted numerically.
inline Matrix transform_lu(const Matrix& a, double tau_hi, double tau_lo) {
  const auto n = a.rows();
  Matrix s = Matrix::Identity(n, n);
  s(n - 2, n - 2) = tau_hi;
  s(n - 2, n - 1) = tau_lo;
  s(n - 1, n - 2) = 1.0 - tau_hi;
  s(n - 1, n - 1) = 1.0 - tau_lo;
  return s.fullPivLu().inverse() * a * s;
}

/// Grid points where `inside(tau_hi, tau_lo)` disagrees with A_H >= -tol, over
/// the N x N grid spanning [hi_min, hi_max] x [lo_min, lo_max].
template <class Inside>
int grid_mismatches(const Matrix& a, Inside inside, double hi_min, double hi_max, double lo_min, double lo_max,
                    int resolution = 400, double tol = 1e-10) {
  int bad = 0;
  for (int il = 0; il < resolution; ++il) {
    const double tl = lo_min + (lo_max - lo_min) * il / (resolution - 1);
    for (int ih = 0; ih < resolution; ++ih) {
      const double th = hi_min + (hi_max - hi_min) * ih / (resolution - 1);
      // S is singular on the diagonal; grid points that land on it within rounding are infeasible.
      const bool brute = th - tl > 1e-12 && transform_lu(a, th, tl).minCoeff() >= -tol;
      if (brute != inside(th, tl)) ++bad;
    }
  }
  return bad;
}

}  // namespace ahmm::oracle
