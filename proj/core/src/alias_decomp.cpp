#include "ahmm/alias_decomp.hpp"

#include <cmath>

namespace ahmm {

namespace {

void require_square(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() < 2)
    throw ValidationError("aliased transition matrix must be square with n >= 2");
}

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("beta must lie in [0, 1]");
}

}  // namespace

Matrix merge_operator(int n) {
  Matrix b = Matrix::Zero(n - 1, n);
  for (int i = 0; i < n - 2; ++i) b(i, i) = 1.0;
  b(n - 2, n - 2) = 1.0;
  b(n - 2, n - 1) = 1.0;
  return b;
}

Matrix lift_operator(int n, double beta) {
  Matrix c = Matrix::Zero(n, n - 1);
  for (int i = 0; i < n - 2; ++i) c(i, i) = 1.0;
  c(n - 2, n - 2) = beta;
  c(n - 1, n - 2) = 1.0 - beta;
  return c;
}

Vector aliased_difference(int n) {
  Vector b = Vector::Zero(n);
  b(n - 2) = 1.0;
  b(n - 1) = -1.0;
  return b;
}

Vector aliased_split(int n, double beta) {
  Vector c = Vector::Zero(n);
  c(n - 2) = 1.0 - beta;
  c(n - 1) = -beta;
  return c;
}

Matrix merge(const Matrix& a, double beta) {
  require_square(a);
  require_beta(beta);
  const int n = static_cast<int>(a.rows());
  return merge_operator(n) * a * lift_operator(n, beta);
}

Vector relative_entry(const Matrix& a) {
  require_square(a);
  const auto n = a.rows();
  Vector alpha = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double into = a(n - 2, j) + a(n - 1, j);
    if (into > kZeroTol) alpha(j) = a(n - 2, j) / into;
  }
  return alpha;
}

AliasDecomposition decompose(const Matrix& a, double beta) {
  require_square(a);
  require_beta(beta);
  const int n = static_cast<int>(a.rows());
  const int p = n - 2;  // first aliased index
  const int q = n - 1;  // second aliased index

  AliasDecomposition d;
  d.beta = beta;
  d.merged = merge(a, beta);
  d.alpha = relative_entry(a);

  const Matrix ba = merge_operator(n) * a;  // (n-1) x n: rows with the aliased pair summed
  d.delta_out = ba.col(p) - ba.col(q);

  auto into = [&](int j) { return a(p, j) + a(q, j); };
  d.delta_in.resize(n - 1);
  for (int j = 0; j < n - 2; ++j) d.delta_in(j) = (d.alpha(j) - beta) * into(j);
  d.delta_in(n - 2) = beta * (d.alpha(p) - beta) * into(p) +
                      (1.0 - beta) * (d.alpha(q) - beta) * into(q);

  d.kappa = (d.alpha(p) - beta) * into(p) - (d.alpha(q) - beta) * into(q);
  return d;
}

std::array<Matrix, 4> reconstruction_terms(const AliasDecomposition& d) {
  const int n = d.n();
  if (d.merged.rows() != n - 1 || d.merged.cols() != n - 1 || d.delta_out.size() != n - 1 ||
      d.delta_in.size() != n - 1)
    throw ValidationError("decomposition components have inconsistent dimensions");
  const Matrix b_op = merge_operator(n);
  const Matrix c_op = lift_operator(n, d.beta);
  const Vector b = aliased_difference(n);
  const Vector c = aliased_split(n, d.beta);
  return {
      c_op * d.merged * b_op,
      c_op * d.delta_out * c.transpose(),
      b * (d.delta_in.transpose() * b_op),
      d.kappa * b * c.transpose(),
  };
}

Matrix reconstruct(const AliasDecomposition& d) {
  const auto terms = reconstruction_terms(d);
  return terms[0] + terms[1] + terms[2] + terms[3];
}

}  // namespace ahmm
