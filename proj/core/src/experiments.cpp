#include "ahmm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "ahmm/io.hpp"
#include "json.hpp"

namespace ahmm {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Separate stream for Baum-Welch initialization so it never collides with simulation.
constexpr std::uint64_t kBwStream = 0x5bd1e9955bd1e995ULL;

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::string to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Mom: return "mom";
    case Pipeline::BwRandom: return "bw-random";
    case Pipeline::BwMom: return "bw-mom";
    case Pipeline::BwExact: return "bw-exact";
  }
  return "unknown";
}

Pipeline parse_pipeline(const std::string& name) {
  for (auto p : {Pipeline::Mom, Pipeline::BwRandom, Pipeline::BwMom, Pipeline::BwExact})
    if (to_string(p) == name) return p;
  throw ValidationError("unknown pipeline '" + name + "' (expected mom, bw-random, bw-mom or bw-exact)");
}

Hmm merged_model(const Hmm& h) {
  if (!h.is_aliased()) return h;
  const auto canon = canonicalize(h);
  const auto st = stationary(canon.model);
  return Hmm(merge(canon.model.transition(), *st.beta), canon.model.unique_emissions());
}

double swap_error(const Matrix& est, const Matrix& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw ValidationError("error metric needs matrices of equal size");
  const double direct = (est - truth).squaredNorm();
  const auto n = est.rows();
  if (n < 2) return direct;
  Matrix swapped = est;
  swapped.row(n - 2).swap(swapped.row(n - 1));
  swapped.col(n - 2).swap(swapped.col(n - 1));
  return std::min(direct, (swapped - truth).squaredNorm());
}

double permutation_error(const Matrix& est, const Matrix& truth) {
  if (est.rows() != truth.rows() || est.cols() != truth.cols())
    throw ValidationError("error metric needs matrices of equal size");
  const int n = static_cast<int>(est.rows());
  if (n > 8) throw ValidationError("permutation error is limited to n <= 8");
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = est(p[i], p[j]) - truth(i, j);
        s += d * d;
      }
    best = std::min(best, s);
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

SweepConfig sweep_config_from_json(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("sweep config: ") + e.what());
  }
  try {
    SweepConfig cfg{load_model(j.at("model").get<std::string>()), {}, 1, 0, {Pipeline::Mom}, {}, 20, true};
    for (const auto& t : j.at("T")) cfg.lengths.push_back(t.get<std::size_t>());
    cfg.replicates = j.value("replicates", 1);
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("pipelines")) {
      cfg.pipelines.clear();
      for (const auto& p : j["pipelines"]) cfg.pipelines.push_back(parse_pipeline(p.get<std::string>()));
    }
    cfg.learn.detection.c_h = j.value("c_h", cfg.learn.detection.c_h);
    cfg.learn.detection.exponent = j.value("exponent", cfg.learn.detection.exponent);
    cfg.bw_iterations = j.value("bw_iterations", 20);
    cfg.timing = j.value("timing", true);
    if (cfg.lengths.empty()) throw ValidationError("sweep config: T must list at least one length");
    for (std::size_t i = 0; i < cfg.lengths.size(); ++i) {
      if (cfg.lengths[i] < 4) throw ValidationError("sweep config: every T must be at least 4");
      if (i > 0 && cfg.lengths[i] <= cfg.lengths[i - 1])
        throw ValidationError("sweep config: T values must be strictly increasing");
    }
    if (cfg.replicates < 1) throw ValidationError("sweep config: replicates must be at least 1");
    if (cfg.pipelines.empty()) throw ValidationError("sweep config: no pipelines selected");
    if (cfg.bw_iterations < 1) throw ValidationError("sweep config: bw_iterations must be at least 1");
    return cfg;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("sweep config: ") + e.what());
  }
}

int worker_count() {
  if (const char* env = std::getenv("AHMM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<SweepRow> run_replicate(const SweepConfig& cfg, std::size_t length, int replicate) {
  const Hmm truth = canonicalize(cfg.model).model;
  const bool aliased = truth.is_aliased();
  const auto unique = truth.unique_emissions();
  const int components = static_cast<int>(unique.size());
  const Vector pi_merged = stationary(truth).pi_merged;
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(replicate));
  const auto traj = simulate(truth, length, seed);
  const std::span<const double> y(traj.outputs);
  const Matrix& a = truth.transition();

  auto score = [&](const Matrix& est) -> std::optional<double> {
    if (est.rows() != a.rows()) return std::nullopt;
    return aliased ? swap_error(est, a) : (est - a).squaredNorm();
  };

  std::optional<LearnReport> mom;
  double mom_ms = 0.0;
  auto run_mom = [&] {
    if (mom) return;
    const auto t0 = Clock::now();
    mom = learn(y, unique, pi_merged, cfg.learn);
    mom_ms = elapsed_ms(t0);
  };

  std::vector<SweepRow> rows;
  for (const Pipeline p : cfg.pipelines) {
    SweepRow row;
    row.pipeline = p;
    row.length = length;
    row.replicate = replicate;
    row.seed = seed;
    BwConfig bw;
    bw.iterations = cfg.bw_iterations;
    bw.seed = mix_seed(seed ^ kBwStream);
    const auto t0 = Clock::now();
    switch (p) {
      case Pipeline::Mom: {
        run_mom();
        row.detected = mom->detection.aliased;
        row.sigma_hat = mom->detection.sigma_hat;
        if (aliased) row.identified_ok = mom->identification && mom->identification->index == components - 1;
        row.mse = score(mom->a_hat);
        row.runtime_ms = mom_ms;
        break;
      }
      case Pipeline::BwMom: {
        run_mom();
        row.detected = mom->detection.aliased;
        row.sigma_hat = mom->detection.sigma_hat;
        if (static_cast<int>(mom->a_hat.rows()) == truth.n()) {
          bw.init = BwInit::FromModel;
          bw.model = to_model(*mom, unique);
          bw.freeze_emissions = true;
        } else {
          bw.init = BwInit::ExactEmissions;
          bw.model = truth;
        }
        const auto res = baum_welch(y, truth.n(), bw);
        row.mse = score(res.model.transition());
        row.runtime_ms = mom_ms + elapsed_ms(t0);
        break;
      }
      case Pipeline::BwExact: {
        bw.init = BwInit::ExactEmissions;
        bw.model = truth;
        const auto res = baum_welch(y, truth.n(), bw);
        row.mse = score(res.model.transition());
        row.runtime_ms = elapsed_ms(t0);
        break;
      }
      case Pipeline::BwRandom: {
        bw.init = BwInit::Random;
        const auto res = baum_welch(y, truth.n(), bw);
        row.mse = permutation_error(res.model.transition(), a);
        row.runtime_ms = elapsed_ms(t0);
        break;
      }
    }
    if (!cfg.timing) row.runtime_ms = 0.0;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> run_sweep(const SweepConfig& cfg, int threads) {
  if (threads <= 0) threads = worker_count();
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t tasks = cfg.lengths.size() * reps;
  std::vector<std::vector<SweepRow>> slots(tasks);
  parallel_for(tasks, threads, [&](std::size_t i) {
    slots[i] = run_replicate(cfg, cfg.lengths[i / reps], static_cast<int>(i % reps));
  });
  std::vector<SweepRow> rows;
  for (auto& s : slots) rows.insert(rows.end(), s.begin(), s.end());
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "pipeline,T,replicate,seed,detected,identified_ok,mse_frobenius_sq,runtime_ms,sigma_hat\n";
  char buf[64];
  auto flag = [](const std::optional<bool>& b) -> std::string { return b ? (*b ? "1" : "0") : ""; };
  auto real = [&buf](const std::optional<double>& v) -> std::string {
    if (!v) return "";
    std::snprintf(buf, sizeof buf, "%.17g", *v);
    return buf;
  };
  for (const auto& r : rows) {
    out += to_string(r.pipeline) + ',' + std::to_string(r.length) + ',' + std::to_string(r.replicate) + ',' +
           std::to_string(r.seed) + ',' + flag(r.detected) + ',' + flag(r.identified_ok) + ',' + real(r.mse) + ',';
    std::snprintf(buf, sizeof buf, "%.3f", r.runtime_ms);
    out += buf;
    out += ',' + real(r.sigma_hat) + '\n';
  }
  return out;
}

CalibrationResult calibrate_threshold(const Hmm& model, std::size_t length, int replicates, std::uint64_t seed,
                                      double quantile, double exponent, int threads) {
  if (replicates < 1) throw ValidationError("calibration needs at least one replicate");
  if (length < 4) throw ValidationError("calibration needs T >= 4");
  if (!(quantile > 0.0 && quantile <= 1.0)) throw ValidationError("quantile must lie in (0, 1]");
  if (threads <= 0) threads = worker_count();
  const Hmm null_model = merged_model(model);
  const Vector pi = stationary(null_model).pi;
  const Kernel k = kernel(null_model.emissions());

  CalibrationResult out;
  out.length = length;
  out.replicates = replicates;
  out.quantile = quantile;
  out.exponent = exponent;
  out.sigmas.assign(static_cast<std::size_t>(replicates), 0.0);
  parallel_for(out.sigmas.size(), threads, [&](std::size_t r) {
    const auto traj = simulate(null_model, length, derive_seed(seed, r));
    const auto m = empirical_moments(traj.outputs, null_model.emissions(), pi, k);
    out.sigmas[r] = detect(m, length, {}).sigma_hat;
  });
  std::vector<double> sorted = out.sigmas;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(sorted.size())));
  out.sigma_quantile = sorted[std::max<std::size_t>(rank, 1) - 1];
  out.c_h = out.sigma_quantile * std::pow(static_cast<double>(length), exponent);
  return out;
}

}  // namespace ahmm
