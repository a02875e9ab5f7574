#pragma once

// Replicated simulation studies: MoM against Baum-Welch, detection power,
// threshold calibration.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ahmm/baselines.hpp"
#include "ahmm/learner.hpp"

namespace ahmm {

enum class Pipeline { Mom, BwRandom, BwMom, BwExact };

std::string to_string(Pipeline p);
/// Throws ValidationError on an unknown name.
Pipeline parse_pipeline(const std::string& name);

/// The merged non-aliased model: merged transition matrix and unique emissions.
/// Returns h unchanged when it has no aliased pair.
Hmm merged_model(const Hmm& h);

/// ||est - truth||_F^2 minimized over swapping the last two states.
double swap_error(const Matrix& est, const Matrix& truth);
/// ||P est P^T - truth||_F^2 minimized over all state permutations (n <= 8).
double permutation_error(const Matrix& est, const Matrix& truth);

struct SweepConfig {
  Hmm model;
  std::vector<std::size_t> lengths;  // strictly increasing
  int replicates = 1;
  std::uint64_t seed = 0;
  std::vector<Pipeline> pipelines{Pipeline::Mom};
  LearnConfig learn;
  int bw_iterations = 20;
  bool timing = true;  // false writes runtime_ms = 0 for byte-stable output
};

/// JSON keys: model (path, relative to the working directory), T, replicates,
/// seed, pipelines, c_h, exponent, bw_iterations, timing.
SweepConfig sweep_config_from_json(const std::string& text);

struct SweepRow {
  Pipeline pipeline = Pipeline::Mom;
  std::size_t length = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::optional<bool> detected;
  std::optional<bool> identified_ok;
  std::optional<double> mse;
  double runtime_ms = 0.0;
  std::optional<double> sigma_hat;
};

/// Worker count: AHMM_THREADS when set to a positive integer, else the hardware concurrency.
int worker_count();

/// Rows ordered by (T, replicate, pipeline) regardless of scheduling.
std::vector<SweepRow> run_sweep(const SweepConfig& cfg, int threads = 0);

/// Runs every configured pipeline on one output sequence of the model.
std::vector<SweepRow> run_replicate(const SweepConfig& cfg, std::size_t length, int replicate);

std::string sweep_csv(const std::vector<SweepRow>& rows);

struct CalibrationResult {
  std::size_t length = 0;
  int replicates = 0;
  double quantile = 0.99;
  std::vector<double> sigmas;
  double sigma_quantile = 0.0;
  double c_h = 0.0;  // sigma_quantile * T^exponent
  double exponent = 1.0 / 3.0;
};

/// Samples sigma_hat under the merged (non-aliased) version of `model`.
CalibrationResult calibrate_threshold(const Hmm& model, std::size_t length, int replicates, std::uint64_t seed,
                                      double quantile = 0.99, double exponent = 1.0 / 3.0, int threads = 0);

}  // namespace ahmm
