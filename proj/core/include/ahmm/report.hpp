#pragma once

// JSON serialization of analysis and learning results. Matrices are written
// row-major as arrays of rows; state and component indices are 1-based.

#include <string>

#include "ahmm/experiments.hpp"
#include "ahmm/structure.hpp"

namespace ahmm {

/// `h` is the analysed model, used to map canonical positions back to its labels.
std::string analysis_json(const AnalysisReport& rep, const Hmm& h);

/// With timing = false the timing block is omitted, making output reproducible.
std::string learn_json(const LearnReport& rep, bool timing = true);

std::string moments_json(const MomentSet& m);

std::string calibration_json(const CalibrationResult& c);

std::string matrix_json(const Matrix& m);

}  // namespace ahmm
