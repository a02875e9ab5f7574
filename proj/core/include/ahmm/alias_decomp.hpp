#pragma once

// Decomposition of a 2-aliased transition matrix.
//
// All functions take A in canonical layout: the aliased states are the last
// two indices (n-2, n-1 zero-based). Writing nb for the merged pseudo-state,
//
//   A = C_beta Abar B + C_beta d_out c_beta^T + b d_in^T B + kappa b c_beta^T
//
// where B (n-1 x n) sums the aliased rows, C_beta (n x n-1) splits the merged
// column by (beta, 1-beta), b = (0,..,0,1,-1) and c_beta = (0,..,0,1-beta,-beta).

#include <array>

#include "ahmm/common.hpp"

namespace ahmm {

Matrix merge_operator(int n);                 // B
Matrix lift_operator(int n, double beta);     // C_beta
Vector aliased_difference(int n);             // b
Vector aliased_split(int n, double beta);     // c_beta

struct AliasDecomposition {
  Matrix merged;   // Abar, (n-1) x (n-1), column-stochastic
  double beta = 0.0;
  Vector alpha;    // length n
  Vector delta_out;  // length n-1
  Vector delta_in;   // length n-1
  double kappa = 0.0;

  int n() const { return static_cast<int>(merged.rows()) + 1; }
};

/// B A C_beta. Throws ValidationError unless 0 <= beta <= 1.
Matrix merge(const Matrix& a, double beta);

/// alpha_j = P(n-1 | j) / P(nb | j) on the entry support (P(nb | j) > 1e-14), 0 elsewhere.
Vector relative_entry(const Matrix& a);

AliasDecomposition decompose(const Matrix& a, double beta);

/// The four terms of the reconstruction, in the order they appear above.
std::array<Matrix, 4> reconstruction_terms(const AliasDecomposition& d);

Matrix reconstruct(const AliasDecomposition& d);

}  // namespace ahmm
