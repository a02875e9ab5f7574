#include "ahmm/hmm.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <queue>
#include <sstream>

namespace ahmm {

double Gaussian::density(double y) const {
  const double d = y - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

double Gaussian::peak() const { return 1.0 / std::sqrt(2.0 * std::numbers::pi * var); }

double Gaussian::inner(const Gaussian& other) const {
  const double s = var + other.var;
  const double d = mean - other.mean;
  return std::exp(-0.5 * d * d / s) / std::sqrt(2.0 * std::numbers::pi * s);
}

double density(const Gaussian& e, double y) { return e.density(y); }

double separation(const Gaussian& a, const Gaussian& b) {
  return std::abs(a.mean - b.mean) / std::sqrt(a.var + b.var);
}

namespace {

std::optional<std::pair<int, int>> find_aliased(const std::vector<Gaussian>& em) {
  const int n = static_cast<int>(em.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (em[i] == em[j]) return std::pair{i, j};
  return std::nullopt;
}

}  // namespace

Hmm::Hmm(Matrix transition, std::vector<Gaussian> emissions, std::optional<Vector> initial,
         std::optional<std::pair<int, int>> aliased_pair)
    : transition_(std::move(transition)),
      emissions_(std::move(emissions)),
      initial_(std::move(initial)) {
  const auto n = static_cast<Eigen::Index>(emissions_.size());
  if (n < 1) throw ValidationError("model needs at least one state");
  if (transition_.rows() != n || transition_.cols() != n) {
    std::ostringstream os;
    os << "transition matrix is " << transition_.rows() << "x" << transition_.cols()
       << " but there are " << n << " emissions";
    throw ValidationError(os.str());
  }
  if (initial_ && initial_->size() != n)
    throw ValidationError("initial distribution length does not match state count");

  if (aliased_pair) {
    auto [a, b] = *aliased_pair;
    if (a > b) std::swap(a, b);
    if (a < 0 || b >= n || a == b) throw ValidationError("aliased_pair indices out of range");
    if (!(emissions_[a] == emissions_[b]))
      throw ValidationError("aliased_pair names states with different emissions");
    aliased_ = std::pair{a, b};
  } else {
    aliased_ = find_aliased(emissions_);
  }
}

bool Hmm::is_canonical() const {
  return !aliased_ || (aliased_->first == n() - 2 && aliased_->second == n() - 1);
}

std::vector<Gaussian> Hmm::unique_emissions() const {
  if (!aliased_) return emissions_;
  std::vector<Gaussian> out;
  out.reserve(emissions_.size() - 1);
  for (int i = 0; i < n(); ++i)
    if (i != aliased_->first && i != aliased_->second) out.push_back(emissions_[i]);
  out.push_back(emissions_[aliased_->first]);
  return out;
}

Hmm Hmm::with_initial(std::optional<Vector> initial) const {
  return Hmm(transition_, emissions_, std::move(initial), aliased_);
}

Hmm permute(const Hmm& h, const std::vector<int>& order) {
  const int n = h.n();
  if (static_cast<int>(order.size()) != n) throw ValidationError("permutation has wrong length");
  std::vector<int> inverse(n, -1);
  for (int k = 0; k < n; ++k) {
    if (order[k] < 0 || order[k] >= n || inverse[order[k]] != -1)
      throw ValidationError("not a permutation");
    inverse[order[k]] = k;
  }
  Matrix a(n, n);
  std::vector<Gaussian> em(n);
  for (int i = 0; i < n; ++i) {
    em[i] = h.emissions()[order[i]];
    for (int j = 0; j < n; ++j) a(i, j) = h.transition()(order[i], order[j]);
  }
  std::optional<Vector> init;
  if (h.initial()) {
    init = Vector(n);
    for (int i = 0; i < n; ++i) (*init)(i) = (*h.initial())(order[i]);
  }
  std::optional<std::pair<int, int>> pair;
  if (h.aliased_pair()) {
    int x = inverse[h.aliased_pair()->first];
    int y = inverse[h.aliased_pair()->second];
    if (x > y) std::swap(x, y);
    pair = std::pair{x, y};
  }
  return Hmm(std::move(a), std::move(em), std::move(init), pair);
}

CanonicalHmm canonicalize(const Hmm& h) {
  std::vector<int> order;
  order.reserve(h.n());
  if (!h.aliased_pair()) {
    order.resize(h.n());
    std::iota(order.begin(), order.end(), 0);
    return {h, order};
  }
  const auto [a, b] = *h.aliased_pair();
  for (int i = 0; i < h.n(); ++i)
    if (i != a && i != b) order.push_back(i);
  order.push_back(a);
  order.push_back(b);
  return {permute(h, order), order};
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Dimension: return "dimension";
    case ViolationKind::EntryRange: return "entry-range";
    case ViolationKind::ColumnSum: return "column-sum";
    case ViolationKind::Reducible: return "reducible";
    case ViolationKind::Periodic: return "periodic";
    case ViolationKind::InitialDistribution: return "initial-distribution";
    case ViolationKind::NonPositiveVariance: return "non-positive-variance";
    case ViolationKind::EmissionCoincidence: return "emission-coincidence";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(),
                     [kind](const Violation& v) { return v.kind == kind; });
}

namespace {

// Breadth-first reachability along edges j -> i (A(i, j) > 0), optionally
// against the edge direction.
std::vector<int> bfs_levels(const Matrix& a, bool reverse) {
  const auto n = a.rows();
  std::vector<int> level(n, -1);
  std::queue<Eigen::Index> q;
  level[0] = 0;
  q.push(0);
  while (!q.empty()) {
    const auto j = q.front();
    q.pop();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = reverse ? a(j, i) : a(i, j);
      if (w > 0.0 && level[i] < 0) {
        level[i] = level[j] + 1;
        q.push(i);
      }
    }
  }
  return level;
}

}  // namespace

bool is_irreducible(const Matrix& a) {
  if (a.rows() == 0) return false;
  const auto fwd = bfs_levels(a, false);
  const auto bwd = bfs_levels(a, true);
  return std::all_of(fwd.begin(), fwd.end(), [](int l) { return l >= 0; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](int l) { return l >= 0; });
}

int period(const Matrix& a) {
  const auto level = bfs_levels(a, false);
  const auto n = a.rows();
  int g = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (level[j] < 0) continue;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (a(i, j) > 0.0 && level[i] >= 0) g = std::gcd(g, std::abs(level[j] + 1 - level[i]));
    }
  }
  return g == 0 ? 1 : g;
}

ValidationReport validate(const Hmm& h) {
  ValidationReport report;
  const Matrix& a = h.transition();
  const int n = h.n();
  auto add = [&report](ViolationKind k, std::string msg) {
    report.violations.push_back({k, std::move(msg)});
  };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(a(i, j)) || a(i, j) < 0.0 || a(i, j) > 1.0) {
        std::ostringstream os;
        os << "A(" << i + 1 << "," << j + 1 << ") = " << a(i, j) << " is outside [0,1]";
        add(ViolationKind::EntryRange, os.str());
      }
    }
    const double s = a.col(j).sum();
    if (!(std::abs(s - 1.0) <= kStochasticTol)) {
      std::ostringstream os;
      os.precision(17);
      os << "column " << j + 1 << " sums to " << s;
      add(ViolationKind::ColumnSum, os.str());
    }
  }

  if (!is_irreducible(a)) {
    add(ViolationKind::Reducible, "transition graph is not strongly connected");
  } else if (const int p = period(a); p > 1) {
    add(ViolationKind::Periodic, "chain has period " + std::to_string(p));
  }

  if (h.initial()) {
    const Vector& p0 = *h.initial();
    if ((p0.array() < 0.0).any() || !(std::abs(p0.sum() - 1.0) <= kStochasticTol))
      add(ViolationKind::InitialDistribution, "initial distribution is not a probability vector");
  }

  int coincident = 0;
  for (int i = 0; i < n; ++i) {
    if (!(h.emissions()[i].var > 0.0)) {
      add(ViolationKind::NonPositiveVariance,
          "emission " + std::to_string(i + 1) + " has non-positive variance");
    }
    for (int j = i + 1; j < n; ++j) {
      const auto& ei = h.emissions()[i];
      const auto& ej = h.emissions()[j];
      if (ei == ej) {
        ++coincident;
      } else if (ei.var > 0.0 && ej.var > 0.0 && separation(ei, ej) < kMinSeparationWarning) {
        report.warnings.push_back("emissions " + std::to_string(i + 1) + " and " +
                                  std::to_string(j + 1) +
                                  " are nearly coincident; the kernel may be ill-conditioned");
      }
    }
  }
  if (coincident > 1) {
    add(ViolationKind::EmissionCoincidence,
        std::to_string(coincident) + " pairs of states share an emission; at most one is allowed");
  }
  return report;
}

Vector stationary_distribution(const Matrix& a) {
  const auto n = a.rows();
  if (!is_irreducible(a)) throw ValidationError("chain is not ergodic: no unique stationary distribution");
  Matrix m = a - Matrix::Identity(n, n);
  m.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs(n - 1) = 1.0;
  Vector pi = m.fullPivLu().solve(rhs);
  // Irreducibility guarantees a positive solution; clean rounding dust.
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

StationaryInfo stationary(const Hmm& h) {
  StationaryInfo info;
  info.pi = stationary_distribution(h.transition());
  if (const auto& pair = h.aliased_pair()) {
    const double merged = info.pi(pair->first) + info.pi(pair->second);
    info.beta = info.pi(pair->first) / merged;
    info.pi_merged.resize(h.n() - 1);
    int k = 0;
    for (int i = 0; i < h.n(); ++i)
      if (i != pair->first && i != pair->second) info.pi_merged(k++) = info.pi(i);
    info.pi_merged(k) = merged;
  } else {
    info.pi_merged = info.pi;
  }
  return info;
}

namespace {

int draw(const Eigen::Ref<const Vector>& probs, double u) {
  double acc = 0.0;
  const auto n = probs.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    acc += probs(i);
    if (u < acc) return static_cast<int>(i);
  }
  // u landed in the rounding gap at the top; return the last state with mass.
  for (Eigen::Index i = n - 1; i >= 0; --i)
    if (probs(i) > 0.0) return static_cast<int>(i);
  return static_cast<int>(n - 1);
}

}  // namespace

Trajectory simulate(const Hmm& h, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw ValidationError("sequence length must be at least 1");
  const auto report = validate(h);
  for (const auto& v : report.violations) {
    if (v.kind == ViolationKind::Reducible || v.kind == ViolationKind::Periodic ||
        v.kind == ViolationKind::EmissionCoincidence)
      continue;
    throw ValidationError("invalid model: " + v.message);
  }
  const Vector start = h.initial() ? *h.initial() : stationary_distribution(h.transition());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Trajectory traj;
  traj.states.resize(length);
  traj.outputs.resize(length);
  int x = draw(start, unif(rng));
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) x = draw(h.transition().col(x), unif(rng));
    traj.states[t] = x;
    traj.outputs[t] = h.emissions()[x].sample(rng);
  }
  return traj;
}

}  // namespace ahmm
