#include "ahmm/moments.hpp"

#include <limits>
#include <sstream>

namespace ahmm {

Matrix Kernel::lifted() const {
  const Matrix b = merge_operator(static_cast<int>(k.rows()) + 1);
  return b.transpose() * k * b;
}

Kernel kernel(const std::vector<Gaussian>& unique_emissions) {
  const int m = static_cast<int>(unique_emissions.size());
  if (m < 1) throw ValidationError("kernel needs at least one component");
  for (int i = 0; i < m; ++i) {
    if (!(unique_emissions[i].var > 0.0)) throw ValidationError("emission variance must be positive");
    for (int j = 0; j < i; ++j)
      if (unique_emissions[i] == unique_emissions[j])
        throw ValidationError("kernel components " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                              " coincide");
  }
  Kernel out;
  out.k.resize(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) out.k(i, j) = out.k(j, i) = unique_emissions[i].inner(unique_emissions[j]);

  Eigen::LLT<Matrix> llt(out.k);
  if (llt.info() != Eigen::Success) throw NumericalError("kernel matrix is not positive definite");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(out.k, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (out.condition > kKernelConditionWarning) {
    std::ostringstream os;
    os << "kernel condition number " << out.condition << " exceeds " << kKernelConditionWarning
       << "; kernel-free moments will be noisy";
    out.warnings.push_back(os.str());
  }
  return out;
}

void derive(MomentSet& s) {
  const int m = s.components();
  if (s.pi_merged.size() != m) throw ValidationError("pi_merged length does not match the kernel");
  if (s.pi_merged.minCoeff() <= 0.0) throw ValidationError("pi_merged must be strictly positive");
  Eigen::LLT<Matrix> llt(s.kernel);
  if (llt.info() != Eigen::Success) throw NumericalError("kernel matrix is not positive definite");
  const Matrix k_inv = llt.solve(Matrix::Identity(m, m));
  const Vector pi_inv = s.pi_merged.cwiseInverse();
  auto strip = [&](const Matrix& x) -> Matrix { return (k_inv * x * k_inv) * pi_inv.asDiagonal(); };

  for (int t = 0; t < 3; ++t) s.m[t] = strip(s.raw_m[t]);
  s.g.clear();
  for (const auto& x : s.raw_g) s.g.push_back(strip(x));

  const Matrix& m1 = s.m[0];
  const Matrix& m2 = s.m[1];
  const Matrix& m3 = s.m[2];
  s.dm2 = m2 - m1 * m1;
  s.dm3 = m3 - m2 * m1 - m1 * m2 + m1 * m1 * m1;
  s.dg.clear();
  for (int c = 0; c < static_cast<int>(s.g.size()); ++c)
    s.dg.push_back(s.g[c] - m1 * s.kernel.col(c).asDiagonal() * m1);
}

MomentSet population_moments(const Hmm& h) {
  const auto canon = canonicalize(h);
  const Hmm& model = canon.model;
  const int n = model.n();
  const auto st = stationary(model);
  const auto unique = model.unique_emissions();
  const int m = static_cast<int>(unique.size());

  Matrix b = Matrix::Identity(n, n);
  Matrix c = Matrix::Identity(n, n);
  if (model.is_aliased()) {
    b = merge_operator(n);
    c = lift_operator(n, *st.beta);
  }

  MomentSet s;
  s.provenance = Provenance::Population;
  s.kernel = kernel(unique).k;
  s.pi_merged = st.pi_merged;

  const Matrix& a = model.transition();
  const Matrix right = c * st.pi_merged.asDiagonal() * s.kernel;  // n x m
  const Matrix left = s.kernel * b;                                // m x n
  Matrix power = a;
  for (int t = 0; t < 3; ++t) {
    s.raw_m[t] = left * power * right;
    power = power * a;
  }
  const Matrix lifted_cols = b.transpose() * s.kernel;  // column c: <f_c, f_x> per state x
  for (int k = 0; k < m; ++k)
    s.raw_g.push_back(left * a * lifted_cols.col(k).asDiagonal() * a * right);
  derive(s);
  return s;
}

MomentAccumulator::MomentAccumulator(std::vector<Gaussian> unique_emissions)
    : emissions_(std::move(unique_emissions)) {
  const int m = static_cast<int>(emissions_.size());
  if (m < 1) throw ValidationError("accumulator needs at least one component");
  for (auto& s : lag_sum_) s = Matrix::Zero(m, m);
  triple_sum_.assign(m, Matrix::Zero(m, m));
  for (auto& h : history_) h = Vector::Zero(m);
}

void MomentAccumulator::push(double y) {
  const int m = static_cast<int>(emissions_.size());
  Vector f(m);
  for (int i = 0; i < m; ++i) f(i) = emissions_[i].density(y);
  for (std::size_t t = 1; t <= 3 && t <= count_; ++t) lag_sum_[t - 1].noalias() += f * history_[t - 1].transpose();
  if (count_ >= 2) {
    const Matrix outer = f * history_[1].transpose();
    for (int c = 0; c < m; ++c) triple_sum_[c].noalias() += history_[0](c) * outer;
  }
  history_[2] = std::move(history_[1]);
  history_[1] = std::move(history_[0]);
  history_[0] = std::move(f);
  ++count_;
}

Matrix MomentAccumulator::lagged(int t) const {
  if (t < 1 || t > 3) throw ValidationError("lag must be 1, 2 or 3");
  if (count_ <= static_cast<std::size_t>(t)) throw ValidationError("sequence too short for the requested lag");
  return lag_sum_[t - 1] / static_cast<double>(count_ - t);
}

Matrix MomentAccumulator::triple(int c) const {
  if (c < 0 || c >= static_cast<int>(triple_sum_.size())) throw ValidationError("component index out of range");
  if (count_ <= 2) throw ValidationError("sequence too short for third order moments");
  return triple_sum_[c] / static_cast<double>(count_ - 2);
}

MomentSet empirical_moments(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                            const Vector& pi_merged, const Kernel& k) {
  if (y.size() < 4) throw ValidationError("sequence too short: need at least 4 outputs");
  if (k.k.rows() != static_cast<Eigen::Index>(unique_emissions.size()))
    throw ValidationError("kernel size does not match the emission list");
  MomentAccumulator acc(unique_emissions);
  for (double v : y) acc.push(v);

  MomentSet s;
  s.provenance = Provenance::Empirical;
  s.length = y.size();
  s.kernel = k.k;
  s.pi_merged = pi_merged;
  for (int t = 0; t < 3; ++t) s.raw_m[t] = acc.lagged(t + 1);
  for (int c = 0; c < static_cast<int>(unique_emissions.size()); ++c) s.raw_g.push_back(acc.triple(c));
  derive(s);
  return s;
}

MomentSet empirical_moments(std::span<const double> y, const std::vector<Gaussian>& unique_emissions,
                            const Vector& pi_merged) {
  return empirical_moments(y, unique_emissions, pi_merged, kernel(unique_emissions));
}

}  // namespace ahmm
