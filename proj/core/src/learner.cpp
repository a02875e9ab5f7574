#include "ahmm/learner.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ahmm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

double detection_threshold(std::size_t length, const DetectionConfig& cfg) {
  if (length == 0) throw ValidationError("detection threshold needs a positive sequence length");
  return cfg.c_h * std::pow(static_cast<double>(length), -cfg.exponent);
}

DetectionResult detect(const MomentSet& m, std::size_t length, const DetectionConfig& cfg) {
  DetectionResult r;
  r.threshold = length == 0 ? kPopulationDetectionThreshold : detection_threshold(length, cfg);
  const int k = m.components();
  r.u_hat = Vector::Zero(k);
  r.v_hat = Vector::Zero(k);
  if (k > 0) {
    r.u_hat(0) = 1.0;
    r.v_hat(0) = 1.0;
  }
  if (k == 0 || m.dm2.cwiseAbs().maxCoeff() == 0.0) return r;
  Eigen::JacobiSVD<Matrix> svd(m.dm2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  r.sigma_hat = s(0);
  r.sigma_second = s.size() > 1 ? s(1) : 0.0;
  r.u_hat = svd.matrixU().col(0);
  r.v_hat = svd.matrixV().col(0);
  r.aliased = r.sigma_hat >= r.threshold;
  return r;
}

DetectionResult detect(const MomentSet& m, const DetectionConfig& cfg) {
  return detect(m, m.provenance == Provenance::Population ? 0 : m.length, cfg);
}

ComponentScores identify_component(const MomentSet& m) {
  const int k = m.components();
  ComponentScores out;
  out.scores = Vector::Zero(k);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int c = 0; c < k; ++c) s += (m.dg[c] - m.kernel(i, c) * m.dm2).squaredNorm();
    out.scores(i) = s;
  }
  Eigen::Index best = 0;
  const double lowest = out.scores.minCoeff(&best);
  out.index = static_cast<int>(best);
  const double tie_tol = 1e-12 * std::max(1.0, std::abs(lowest));
  int ties = 0;
  for (int i = 0; i < k; ++i)
    if (out.scores(i) - lowest <= tie_tol) ++ties;
  if (ties > 1) out.warnings.push_back("identification scores tie; choosing the smallest index");
  return out;
}

double estimate_kappa(const Matrix& dm3, const Matrix& dm2) {
  const double denom = dm2.squaredNorm();
  if (!(denom > 0.0)) throw NumericalError("kappa is undefined: dM2 vanishes");
  return (dm3.array() * dm2.array()).sum() / denom;
}

double estimate_kappa(const MomentSet& m) { return estimate_kappa(m.dm3, m.dm2); }

namespace {

// gamma' A'_H as a polynomial in (gamma', beta'):
//   g (T1a + b T1b) + g^2 (T2a + b T2b + b^2 T2c) + s T3 + g k (T4a + b T4b)
struct CandidateTerms {
  Matrix t1a, t1b, t2a, t2b, t2c, t3, t4a, t4b;
  double sigma = 0.0;
  double kappa = 0.0;

  explicit CandidateTerms(const AliasedFactors& f) : sigma(f.sigma), kappa(f.kappa) {
    const int m = static_cast<int>(f.merged.rows());
    const int n = m + 1;
    if (f.merged.cols() != m || f.u.size() != m || f.v.size() != m)
      throw ValidationError("aliased factors have inconsistent dimensions");
    const Matrix b_op = merge_operator(n);
    const Matrix c0 = lift_operator(n, 0.0);
    const Matrix dc = lift_operator(n, 1.0) - c0;
    const Vector b = aliased_difference(n);
    const Vector s0 = aliased_split(n, 0.0);
    const Vector ds = aliased_split(n, 1.0) - s0;
    t1a = c0 * f.merged * b_op;
    t1b = dc * f.merged * b_op;
    t2a = (c0 * f.u) * s0.transpose();
    t2b = (dc * f.u) * s0.transpose() + (c0 * f.u) * ds.transpose();
    t2c = (dc * f.u) * ds.transpose();
    t3 = b * (f.v.transpose() * b_op);
    t4a = b * s0.transpose();
    t4b = b * ds.transpose();
  }

  Matrix value(double g, double beta) const {
    return g * (t1a + beta * t1b) + g * g * (t2a + beta * (t2b + beta * t2c)) + sigma * t3 +
           g * kappa * (t4a + beta * t4b);
  }

  double objective(double g, double beta) const { return value(g, beta).minCoeff(); }

  Matrix d_gamma(double g, double beta) const {
    return (t1a + beta * t1b) + 2.0 * g * (t2a + beta * (t2b + beta * t2c)) + kappa * (t4a + beta * t4b);
  }

  Matrix d_beta(double g, double beta) const {
    return g * t1b + g * g * (t2b + 2.0 * beta * t2c) + g * kappa * t4b;
  }
};

struct Box {
  double g_lo, g_hi, b_lo = 0.0, b_hi = 1.0;
  double clamp_g(double g) const { return std::clamp(g, g_lo, g_hi); }
  double clamp_b(double b) const { return std::clamp(b, b_lo, b_hi); }
};

struct Point {
  double g = 0.0, b = 0.0, h = -std::numeric_limits<double>::infinity();
};

Point grid_search(const CandidateTerms& terms, const Box& box, int grid) {
  Point best;
  for (int i = 0; i < grid; ++i) {
    const double g = box.g_lo + (box.g_hi - box.g_lo) * i / (grid - 1);
    for (int j = 0; j < grid; ++j) {
      const double b = box.b_lo + (box.b_hi - box.b_lo) * j / (grid - 1);
      const double h = terms.objective(g, b);
      if (h > best.h) best = {g, b, h};
    }
  }
  return best;
}

Point nelder_mead(const CandidateTerms& terms, const Box& box, Point start, double step_g, double step_b,
                  int iterations, double tol) {
  auto eval = [&](double g, double b) {
    g = box.clamp_g(g);
    b = box.clamp_b(b);
    return Point{g, b, terms.objective(g, b)};
  };
  std::array<Point, 3> s = {start, eval(start.g + step_g, start.b), eval(start.g, start.b + step_b)};
  if (s[1].g == start.g) s[1] = eval(start.g - step_g, start.b);
  if (s[2].b == start.b) s[2] = eval(start.g, start.b - step_b);
  // Maximizing h: keep s[0] the best vertex.
  auto order = [&] { std::sort(s.begin(), s.end(), [](const Point& x, const Point& y) { return x.h > y.h; }); };
  for (int it = 0; it < iterations; ++it) {
    order();
    const double spread = s[0].h - s[2].h;
    const double size = std::max({std::abs(s[1].g - s[0].g), std::abs(s[2].g - s[0].g),
                                  std::abs(s[1].b - s[0].b), std::abs(s[2].b - s[0].b)});
    if (spread <= tol && size <= tol) break;
    const double cg = 0.5 * (s[0].g + s[1].g);
    const double cb = 0.5 * (s[0].b + s[1].b);
    const Point refl = eval(cg + (cg - s[2].g), cb + (cb - s[2].b));
    if (refl.h > s[0].h) {
      const Point exp = eval(cg + 2.0 * (cg - s[2].g), cb + 2.0 * (cb - s[2].b));
      s[2] = exp.h > refl.h ? exp : refl;
    } else if (refl.h > s[1].h) {
      s[2] = refl;
    } else {
      const Point con = eval(cg + 0.5 * (s[2].g - cg), cb + 0.5 * (s[2].b - cb));
      if (con.h > s[2].h) {
        s[2] = con;
      } else {
        for (int k = 1; k < 3; ++k) s[k] = eval(0.5 * (s[0].g + s[k].g), 0.5 * (s[0].b + s[k].b));
      }
    }
  }
  order();
  return s[0];
}

// max over d in a box of min_k (e_k + p_k d_g + q_k d_b), by vertex enumeration.
struct Piece {
  double e, p, q;
  double at(double x, double y) const { return e + p * x + q * y; }
};

std::pair<double, double> maximize_min_affine(const std::vector<Piece>& pieces, double x_lo, double x_hi,
                                              double y_lo, double y_hi) {
  auto phi = [&](double x, double y) {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& k : pieces) v = std::min(v, k.at(x, y));
    return v;
  };
  const double eps = 1e-14 * std::max({1.0, std::abs(x_lo), std::abs(x_hi), std::abs(y_lo), std::abs(y_hi)});
  auto inside = [&](double x, double y) {
    return x >= x_lo - eps && x <= x_hi + eps && y >= y_lo - eps && y <= y_hi + eps;
  };
  double best_x = 0.0, best_y = 0.0, best = phi(0.0, 0.0);
  auto consider = [&](double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y) || !inside(x, y)) return;
    x = std::clamp(x, x_lo, x_hi);
    y = std::clamp(y, y_lo, y_hi);
    const double v = phi(x, y);
    if (v > best) {
      best = v;
      best_x = x;
      best_y = y;
    }
  };
  for (double x : {x_lo, x_hi})
    for (double y : {y_lo, y_hi}) consider(x, y);
  const std::size_t k = pieces.size();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      // Equal pieces along a box edge.
      const double de = pieces[i].e - pieces[j].e;
      const double dp = pieces[i].p - pieces[j].p;
      const double dq = pieces[i].q - pieces[j].q;
      for (double x : {x_lo, x_hi})
        if (dq != 0.0) consider(x, -(de + dp * x) / dq);
      for (double y : {y_lo, y_hi})
        if (dp != 0.0) consider(-(de + dq * y) / dp, y);
      for (std::size_t l = j + 1; l < k; ++l) {
        const double de2 = pieces[i].e - pieces[l].e;
        const double dp2 = pieces[i].p - pieces[l].p;
        const double dq2 = pieces[i].q - pieces[l].q;
        const double det = dp * dq2 - dq * dp2;
        if (std::abs(det) < 1e-300) continue;
        consider((-de * dq2 + dq * de2) / det, (-dp * de2 + dp2 * de) / det);
      }
    }
  }
  return {best_x, best_y};
}

// Successive linear programming with a trust region; converges to the vertex
// where the active entries of gamma' A'_H balance.
Point polish(const CandidateTerms& terms, const Box& box, Point x) {
  constexpr std::size_t kMaxPieces = 12;
  double radius = 1e-2;
  const double g_scale = box.g_hi - box.g_lo;
  for (int it = 0; it < 200 && radius > 1e-16; ++it) {
    const Matrix e = terms.value(x.g, x.b);
    const Matrix dg = terms.d_gamma(x.g, x.b);
    const Matrix db = terms.d_beta(x.g, x.b);
    std::vector<Piece> all;
    all.reserve(static_cast<std::size_t>(e.size()));
    for (Eigen::Index k = 0; k < e.size(); ++k) all.push_back({e(k), dg(k), db(k)});
    std::sort(all.begin(), all.end(), [](const Piece& a, const Piece& b) { return a.e < b.e; });
    if (all.size() > kMaxPieces) all.resize(kMaxPieces);
    const double x_lo = std::max(box.g_lo - x.g, -radius * g_scale);
    const double x_hi = std::min(box.g_hi - x.g, radius * g_scale);
    const double y_lo = std::max(box.b_lo - x.b, -radius);
    const double y_hi = std::min(box.b_hi - x.b, radius);
    const auto [step_g, step_b] = maximize_min_affine(all, x_lo, x_hi, y_lo, y_hi);
    const Point trial{box.clamp_g(x.g + step_g), box.clamp_b(x.b + step_b), 0.0};
    const double h = terms.objective(trial.g, trial.b);
    if (h > x.h) {
      x = {trial.g, trial.b, h};
      radius = std::min(radius * 2.0, 0.5);
    } else {
      radius *= 0.25;
    }
  }
  return x;
}

Point optimize(const CandidateTerms& terms, const Box& box, const GammaBetaConfig& cfg) {
  const int grid = std::max(cfg.grid, 2);
  Point best = grid_search(terms, box, grid);
  const double step_g = (box.g_hi - box.g_lo) / (grid - 1);
  const double step_b = (box.b_hi - box.b_lo) / (grid - 1);
  best = nelder_mead(terms, box, best, step_g, step_b, cfg.simplex_iterations, cfg.simplex_tol);
  if (cfg.polish) best = polish(terms, box, best);
  return best;
}

}  // namespace

Matrix scaled_candidate(const AliasedFactors& f, double gamma, double beta) {
  return CandidateTerms(f).value(gamma, beta);
}

double gamma_beta_objective(const AliasedFactors& f, double gamma, double beta) {
  return CandidateTerms(f).objective(gamma, beta);
}

GammaBetaEstimate estimate_gamma_beta(const AliasedFactors& f, const GammaBetaConfig& cfg) {
  if (!(f.sigma > 0.0)) throw NumericalError("gamma and beta are undefined when sigma vanishes");
  const Box box{cfg.gamma_floor_ratio * f.sigma, 2.0 / f.sigma};
  // Fix the sign of the pair so that (u, v) and (-u, -v) give identical estimates.
  Eigen::Index lead = 0;
  f.u.cwiseAbs().maxCoeff(&lead);
  const bool input_negative = f.u(lead) < 0.0;
  AliasedFactors pos = f;
  if (input_negative) {
    pos.u = -f.u;
    pos.v = -f.v;
  }
  AliasedFactors neg = pos;
  neg.u = -pos.u;
  neg.v = -pos.v;
  const Point p = optimize(CandidateTerms(pos), box, cfg);
  const Point q = optimize(CandidateTerms(neg), box, cfg);
  if (q.h > p.h) return {q.g, q.b, q.h, !input_negative};
  return {p.g, p.b, p.h, input_negative};
}

Projection project_column_stochastic(const Matrix& x) {
  Projection out;
  out.a = x;
  const auto n = x.rows();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (out.a(i, j) < 0.0) {
        out.negativity_mass -= out.a(i, j);
        out.a(i, j) = 0.0;
      }
    }
    const double s = out.a.col(j).sum();
    if (s > 0.0) out.a.col(j) /= s;
    else out.a.col(j).setConstant(1.0 / static_cast<double>(n));
  }
  return out;
}

Projection assemble(const AliasedFactors& f, double gamma, double beta) {
  if (!(gamma > 0.0)) throw ValidationError("assemble needs gamma > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("assemble needs beta in [0, 1]");
  const Matrix raw = CandidateTerms(f).value(gamma, beta) / gamma;
  return project_column_stochastic(raw);
}

namespace {

// Moves component `index` to the last position.
std::vector<int> aliased_last_order(int k, int index) {
  std::vector<int> order;
  for (int i = 0; i < k; ++i)
    if (i != index) order.push_back(i);
  order.push_back(index);
  return order;
}

}  // namespace

LearnReport learn_from_moments(const MomentSet& m, const LearnConfig& cfg) {
  const auto start = Clock::now();
  LearnReport rep;
  const int k = m.components();

  auto t = Clock::now();
  rep.detection = detect(m, cfg.detection);
  rep.timing.detect_ms = elapsed_ms(t);

  if (!rep.detection.aliased) {
    t = Clock::now();
    const auto proj = project_column_stochastic(m.m[0]);
    rep.a_hat = proj.a;
    rep.negativity_mass = proj.negativity_mass;
    rep.state_components.resize(k);
    std::iota(rep.state_components.begin(), rep.state_components.end(), 0);
    rep.timing.assemble_ms = elapsed_ms(t);
    rep.timing.total_ms = elapsed_ms(start);
    return rep;
  }

  t = Clock::now();
  rep.identification = identify_component(m);
  for (const auto& w : rep.identification->warnings) rep.warnings.push_back(w);
  rep.timing.identify_ms = elapsed_ms(t);

  t = Clock::now();
  rep.kappa_hat = estimate_kappa(m);
  const auto order = aliased_last_order(k, rep.identification->index);
  AliasedFactors f;
  f.kappa = rep.kappa_hat;
  f.sigma = rep.detection.sigma_hat;
  f.merged.resize(k, k);
  f.u.resize(k);
  f.v.resize(k);
  for (int a = 0; a < k; ++a) {
    f.u(a) = rep.detection.u_hat(order[a]);
    f.v(a) = rep.detection.v_hat(order[a]);
    for (int b = 0; b < k; ++b) f.merged(a, b) = m.m[0](order[a], order[b]);
  }
  const auto gb = estimate_gamma_beta(f, cfg.gamma_beta);
  rep.gamma_hat = gb.gamma;
  rep.beta_hat = gb.beta;
  rep.objective = gb.objective;
  rep.flipped = gb.flipped;
  rep.timing.optimize_ms = elapsed_ms(t);
  if (gb.objective < 0.0) {
    std::ostringstream os;
    os << "no (gamma, beta) gives a non-negative matrix; best objective " << gb.objective;
    rep.warnings.push_back(os.str());
  }

  t = Clock::now();
  if (gb.flipped) {
    f.u = -f.u;
    f.v = -f.v;
  }
  const auto proj = assemble(f, gb.gamma, gb.beta);
  rep.a_hat = proj.a;
  rep.negativity_mass = proj.negativity_mass;
  rep.state_components = order;
  rep.state_components.push_back(rep.identification->index);
  rep.timing.assemble_ms = elapsed_ms(t);
  rep.timing.total_ms = elapsed_ms(start);
  return rep;
}

LearnReport learn(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                  const Vector& pi_merged, const LearnConfig& cfg) {
  const auto start = Clock::now();
  if (y.size() < 4) throw ValidationError("sequence too short: need at least 4 outputs");
  const Kernel k = kernel(unique_emissions);
  const MomentSet m = empirical_moments(y, unique_emissions, pi_merged, k);
  const double moments_ms = elapsed_ms(start);
  LearnReport rep = learn_from_moments(m, cfg);
  rep.warnings.insert(rep.warnings.begin(), k.warnings.begin(), k.warnings.end());
  rep.timing.moments_ms = moments_ms;
  rep.timing.total_ms = elapsed_ms(start);
  return rep;
}

Hmm to_model(const LearnReport& rep, const std::vector<Gaussian>& unique_emissions) {
  std::vector<Gaussian> em;
  for (int c : rep.state_components) {
    if (c < 0 || c >= static_cast<int>(unique_emissions.size()))
      throw ValidationError("state component index out of range");
    em.push_back(unique_emissions[c]);
  }
  return Hmm(rep.a_hat, std::move(em));
}

}  // namespace ahmm
