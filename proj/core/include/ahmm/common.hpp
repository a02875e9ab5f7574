#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ahmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed model, wrong dimensions, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The input is well formed but the computation cannot proceed
/// (singular kernel, vanishing statistic, underflow).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Columns of a transition matrix must sum to one within this tolerance.
inline constexpr double kStochasticTol = 1e-12;

// Entries at or below this magnitude count as structural zeros.
inline constexpr double kZeroTol = 1e-14;

/// splitmix64 finalizer; used to derive independent per-replicate seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix_seed(mix_seed(base) ^ (index + 0x632be59bd9b4e019ULL));
}

}  // namespace ahmm
