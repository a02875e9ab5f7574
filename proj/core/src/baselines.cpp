#include "ahmm/baselines.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace ahmm {

namespace {

Matrix densities(const std::vector<Gaussian>& em, std::span<const double> y) {
  const int n = static_cast<int>(em.size());
  Matrix f(n, static_cast<Eigen::Index>(y.size()));
  for (std::size_t t = 0; t < y.size(); ++t)
    for (int i = 0; i < n; ++i) f(i, static_cast<Eigen::Index>(t)) = em[i].density(y[t]);
  return f;
}

Matrix dirichlet_columns(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  Matrix a(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) a(i, j) = expo(rng);
    a.col(j) /= a.col(j).sum();
  }
  return a;
}

struct Forward {
  Matrix alpha;   // n x T, each column normalized
  Vector scale;   // c_t
  double loglik = 0.0;
};

Forward forward(const Matrix& a, const Vector& p0, const Matrix& f, int iteration) {
  const auto n = f.rows();
  const auto len = f.cols();
  Forward out;
  out.alpha.resize(n, len);
  out.scale.resize(len);
  Vector cur = p0.cwiseProduct(f.col(0));
  for (Eigen::Index t = 0; t < len; ++t) {
    if (t > 0) cur = f.col(t).cwiseProduct(a * out.alpha.col(t - 1));
    const double c = cur.sum();
    if (!(c > 0.0) || !std::isfinite(c)) {
      std::ostringstream os;
      os << "forward recursion underflow at iteration " << iteration << ", step " << t;
      throw NumericalError(os.str());
    }
    out.scale(t) = c;
    out.alpha.col(t) = cur / c;
    out.loglik += std::log(c);
  }
  return out;
}

double sample_variance(std::span<const double> y) {
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  return var / static_cast<double>(y.size());
}

}  // namespace

double log_likelihood(const Hmm& h, std::span<const double> y) {
  if (y.empty()) throw ValidationError("empty output sequence");
  Vector p0;
  if (h.initial()) p0 = *h.initial();
  else p0 = stationary_distribution(h.transition());
  return forward(h.transition(), p0, densities(h.emissions(), y), 0).loglik;
}

BwResult baum_welch(std::span<const double> y, int n, const BwConfig& cfg) {
  if (n < 1) throw ValidationError("Baum-Welch needs n >= 1");
  if (cfg.iterations < 1) throw ValidationError("Baum-Welch needs at least one iteration");
  if (y.size() < static_cast<std::size_t>(n)) throw ValidationError("sequence shorter than the number of states");
  if (!(cfg.variance_floor > 0.0)) throw ValidationError("variance floor must be positive");

  std::mt19937_64 rng(cfg.seed);
  Matrix a;
  std::vector<Gaussian> em;
  Vector p0 = Vector::Constant(n, 1.0 / n);
  bool freeze = cfg.freeze_emissions;

  switch (cfg.init) {
    case BwInit::Random: {
      a = dirichlet_columns(n, rng);
      const double var = std::max(sample_variance(y), cfg.variance_floor);
      std::uniform_int_distribution<std::size_t> pick(0, y.size() - 1);
      for (int i = 0; i < n; ++i) em.push_back({y[pick(rng)], var});
      break;
    }
    case BwInit::FromModel: {
      if (!cfg.model || cfg.model->n() != n) throw ValidationError("from-model init needs a model with n states");
      a = cfg.model->transition();
      em = cfg.model->emissions();
      if (cfg.model->initial()) {
        p0 = *cfg.model->initial();
      } else if (is_irreducible(a)) {
        p0 = stationary_distribution(a);
      }
      break;
    }
    case BwInit::ExactEmissions: {
      if (!cfg.model || cfg.model->n() != n)
        throw ValidationError("exact-emissions init needs a model with n states");
      a = dirichlet_columns(n, rng);
      em = cfg.model->emissions();
      freeze = true;
      break;
    }
  }

  BwResult res{Hmm(a, em, p0), {}, false};
  const auto len = static_cast<Eigen::Index>(y.size());
  for (int it = 0; it < cfg.iterations; ++it) {
    const Matrix f = densities(em, y);
    const Forward fw = forward(a, p0, f, it);
    res.loglik.push_back(fw.loglik);

    // Backward pass with the forward scale factors; accumulate expected transitions.
    Matrix flow = Matrix::Zero(n, n);  // sum_t w_{t+1} alpha_t^T
    Matrix post(n, len);
    Vector beta = Vector::Ones(n);
    post.col(len - 1) = fw.alpha.col(len - 1);
    for (Eigen::Index t = len - 2; t >= 0; --t) {
      const Vector w = f.col(t + 1).cwiseProduct(beta) / fw.scale(t + 1);
      flow.noalias() += w * fw.alpha.col(t).transpose();
      beta = a.transpose() * w;
      post.col(t) = fw.alpha.col(t).cwiseProduct(beta);
    }
    Matrix counts = flow.cwiseProduct(a);
    for (int j = 0; j < n; ++j) {
      const double s = counts.col(j).sum();
      if (s > 0.0) a.col(j) = counts.col(j) / s;
    }
    p0 = post.col(0) / post.col(0).sum();

    if (!freeze) {
      for (int i = 0; i < n; ++i) {
        double w = 0.0, m1 = 0.0;
        for (Eigen::Index t = 0; t < len; ++t) {
          w += post(i, t);
          m1 += post(i, t) * y[t];
        }
        if (!(w > 0.0)) continue;
        const double mean = m1 / w;
        double v = 0.0;
        for (Eigen::Index t = 0; t < len; ++t) v += post(i, t) * (y[t] - mean) * (y[t] - mean);
        v /= w;
        if (v < cfg.variance_floor) {
          v = cfg.variance_floor;
          res.variance_floor_hit = true;
        }
        em[i] = {mean, v};
      }
    }
  }
  res.loglik.push_back(forward(a, p0, densities(em, y), cfg.iterations).loglik);
  res.model = Hmm(a, em, p0);
  return res;
}

std::string bw_trace_csv(const std::vector<double>& loglik) {
  std::string out = "iteration,loglik\n";
  char buf[64];
  for (std::size_t i = 0; i < loglik.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, loglik[i]);
    out += buf;
  }
  return out;
}

MixtureFit mixture_weights_em(std::span<const double> y, const std::vector<Gaussian>& components, int iterations,
                              double tol) {
  const int k = static_cast<int>(components.size());
  if (k < 1) throw ValidationError("mixture needs at least one component");
  if (y.empty()) throw ValidationError("empty output sequence");
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < i; ++j)
      if (components[i] == components[j]) throw ValidationError("mixture components must be distinct");
  const Matrix f = densities(components, y);
  MixtureFit fit;
  fit.weights = Vector::Constant(k, 1.0 / k);
  const auto len = f.cols();
  for (int it = 0; it <= iterations; ++it) {
    Vector next = Vector::Zero(k);
    double ll = 0.0;
    for (Eigen::Index t = 0; t < len; ++t) {
      const Vector r = fit.weights.cwiseProduct(f.col(t));
      const double s = r.sum();
      if (!(s > 0.0)) continue;
      ll += std::log(s);
      next += r / s;
    }
    fit.loglik.push_back(ll);
    if (it == iterations) break;
    next /= next.sum();
    const double change = (next - fit.weights).cwiseAbs().maxCoeff();
    fit.weights = next;
    fit.iterations = it + 1;
    if (change < tol) break;
  }
  return fit;
}

}  // namespace ahmm
