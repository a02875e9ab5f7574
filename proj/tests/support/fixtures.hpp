#pragma once

#include <vector>

#include "ahmm/hmm.hpp"

namespace ahmm {

/// The four-state example: states 3 and 4 share N(mu, 1).
inline Hmm example_model(double aliased_mean = 0.0) {
  Matrix a(4, 4);
  a << 0.3, 0.25, 0.0, 0.8,  //
      0.6, 0.25, 0.2, 0.0,   //
      0.0, 0.5, 0.1, 0.1,    //
      0.1, 0.0, 0.7, 0.1;
  return Hmm(a, {{3.0, 1.0}, {6.0, 1.0}, {aliased_mean, 1.0}, {aliased_mean, 1.0}});
}

}  // namespace ahmm
