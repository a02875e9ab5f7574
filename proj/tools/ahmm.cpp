// ahmm: command-line front end for aliased-HMM analysis and learning.
//
// Exit codes: 0 success, 2 invalid input or usage, 3 runtime failure.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ahmm/baselines.hpp"
#include "ahmm/experiments.hpp"
#include "ahmm/io.hpp"
#include "ahmm/learner.hpp"
#include "ahmm/report.hpp"
#include "ahmm/structure.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") std::cout << text;
  else ahmm::write_text(path, text);
}

// Everything the moment-based commands need from a model file and an output file.
struct LearnInputs {
  std::vector<ahmm::Gaussian> unique;
  ahmm::Vector pi_merged;
  std::vector<double> y;
};

struct LearnFlags {
  std::string model;
  std::string outputs;
  std::string out;
  std::string dump_moments;
  double c_h = 2.0;
  double exponent = 1.0 / 3.0;
  bool estimate_weights = false;
  bool no_timing = false;
};

void add_learn_flags(CLI::App* cmd, LearnFlags& f) {
  cmd->add_option("--model", f.model, "model JSON supplying the emission components and merged weights")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--y", f.outputs, "output sequence CSV (header y)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "report path (default stdout)");
  cmd->add_option("--c-h", f.c_h, "threshold constant in h_T = c_h T^-exponent");
  cmd->add_option("--exponent", f.exponent, "threshold exponent");
  cmd->add_flag("--estimate-weights", f.estimate_weights, "fit merged weights by mixture EM instead of the model's");
  cmd->add_option("--dump-moments", f.dump_moments, "write the moment set as JSON");
  cmd->add_flag("--no-timing", f.no_timing, "omit wall-clock timings for reproducible output");
}

LearnInputs load_inputs(const LearnFlags& f) {
  const auto h = ahmm::canonicalize(ahmm::load_model(f.model)).model;
  LearnInputs in;
  in.unique = h.unique_emissions();
  in.y = ahmm::read_outputs_csv(f.outputs);
  if (f.estimate_weights) in.pi_merged = ahmm::mixture_weights_em(in.y, in.unique).weights;
  else in.pi_merged = ahmm::stationary(h).pi_merged;
  return in;
}

ahmm::MomentSet moments_for(const LearnFlags& f, const LearnInputs& in) {
  auto m = ahmm::empirical_moments(in.y, in.unique, in.pi_merged);
  if (!f.dump_moments.empty()) ahmm::write_text(f.dump_moments, ahmm::moments_json(m));
  return m;
}

ahmm::DetectionConfig detection_of(const LearnFlags& f) { return {f.c_h, f.exponent}; }

int run(int argc, char** argv) {
  CLI::App app{"Detect, analyze and learn HMMs with two aliased states"};
  app.require_subcommand(1);

  // simulate
  std::string sim_model, sim_out, sim_states;
  std::size_t sim_len = 0;
  std::uint64_t sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "draw an output sequence from a model");
  sim->add_option("--model", sim_model, "model JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--T", sim_len, "sequence length")->required()->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--out", sim_out, "output CSV (header y)")->required();
  sim->add_option("--states", sim_states, "also write the hidden states (header x, 1-based)");

  // analyze
  std::string an_model, an_out;
  auto* an = app.add_subcommand("analyze", "minimality and identifiability report");
  an->add_option("--model", an_model, "model JSON")->required()->check(CLI::ExistingFile);
  an->add_option("--out", an_out, "report path (default stdout)");

  LearnFlags det_f, id_f, learn_f;
  std::string learned_model;
  auto* det = app.add_subcommand("detect", "test an output sequence for aliasing");
  add_learn_flags(det, det_f);
  auto* idc = app.add_subcommand("identify", "detect and identify the aliased component");
  add_learn_flags(idc, id_f);
  auto* lrn = app.add_subcommand("learn", "run the full moment-based learner");
  add_learn_flags(lrn, learn_f);
  lrn->add_option("--model-out", learned_model, "write the learned model JSON");

  // bw
  std::string bw_y, bw_model, bw_out, bw_trace, bw_init = "random";
  int bw_n = 0;
  ahmm::BwConfig bw_cfg;
  auto* bw = app.add_subcommand("bw", "Baum-Welch baseline");
  bw->add_option("--y", bw_y, "output sequence CSV")->required()->check(CLI::ExistingFile);
  bw->add_option("--n", bw_n, "number of states (defaults to the model's)");
  bw->add_option("--model", bw_model, "model JSON for from-model or exact-emissions init")->check(CLI::ExistingFile);
  bw->add_option("--init", bw_init, "random | from-model | exact-emissions")
      ->check(CLI::IsMember({"random", "from-model", "exact-emissions"}));
  bw->add_option("--iterations", bw_cfg.iterations, "EM iterations")->check(CLI::PositiveNumber);
  bw->add_option("--seed", bw_cfg.seed, "RNG seed for random initialization");
  bw->add_option("--variance-floor", bw_cfg.variance_floor, "lower bound on emission variances");
  bw->add_flag("--freeze-emissions", bw_cfg.freeze_emissions, "keep emissions fixed");
  bw->add_option("--out", bw_out, "learned model JSON")->required();
  bw->add_option("--trace", bw_trace, "log-likelihood trace CSV");

  // sweep
  std::string sw_config, sw_out;
  int sw_threads = 0;
  bool sw_no_timing = false;
  auto* sw = app.add_subcommand("sweep", "replicated simulation study");
  sw->add_option("--config", sw_config, "sweep JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--out", sw_out, "CSV path (default stdout)");
  sw->add_option("--threads", sw_threads, "worker count (default AHMM_THREADS or CPU count)");
  sw->add_flag("--no-timing", sw_no_timing, "write runtime_ms = 0 for byte-stable output");

  // calibrate-threshold
  std::string cal_model, cal_out;
  std::size_t cal_len = 1000;
  int cal_reps = 200, cal_threads = 0;
  std::uint64_t cal_seed = 0;
  double cal_q = 0.99, cal_exp = 1.0 / 3.0;
  auto* cal = app.add_subcommand("calibrate-threshold",
                                 "null distribution of sigma_hat under the merged model and the implied c_h");
  cal->add_option("--model", cal_model, "model JSON (merged before sampling)")->required()->check(CLI::ExistingFile);
  cal->add_option("--T", cal_len, "sequence length");
  cal->add_option("--replicates", cal_reps, "number of null sequences")->check(CLI::PositiveNumber);
  cal->add_option("--seed", cal_seed, "base seed");
  cal->add_option("--quantile", cal_q, "quantile of sigma_hat")->check(CLI::Range(0.0, 1.0));
  cal->add_option("--exponent", cal_exp, "threshold exponent");
  cal->add_option("--threads", cal_threads, "worker count");
  cal->add_option("--out", cal_out, "JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitValidation;
  }

  if (*sim) {
    const auto h = ahmm::load_model(sim_model);
    const auto r = ahmm::validate(h);
    if (!r.ok()) throw ahmm::ValidationError("invalid model: " + r.violations.front().message);
    const auto traj = ahmm::simulate(h, sim_len, sim_seed);
    ahmm::write_outputs_csv(sim_out, traj.outputs);
    if (!sim_states.empty()) ahmm::write_states_csv(sim_states, traj.states);
  } else if (*an) {
    const auto h = ahmm::load_model(an_model);
    emit(ahmm::analysis_json(ahmm::analyze(h), h), an_out);
  } else if (*det) {
    const auto in = load_inputs(det_f);
    const auto m = moments_for(det_f, in);
    ahmm::LearnReport rep;
    rep.detection = ahmm::detect(m, detection_of(det_f));
    emit(ahmm::learn_json(rep, false), det_f.out);
  } else if (*idc) {
    const auto in = load_inputs(id_f);
    const auto m = moments_for(id_f, in);
    ahmm::LearnReport rep;
    rep.detection = ahmm::detect(m, detection_of(id_f));
    if (rep.detection.sigma_hat > 0.0) {
      rep.identification = ahmm::identify_component(m);
      if (!rep.detection.aliased) rep.warnings.push_back("aliasing not detected; identification shown for reference");
    }
    emit(ahmm::learn_json(rep, false), id_f.out);
  } else if (*lrn) {
    const auto in = load_inputs(learn_f);
    const auto m = moments_for(learn_f, in);
    ahmm::LearnConfig cfg;
    cfg.detection = detection_of(learn_f);
    const auto rep = ahmm::learn_from_moments(m, cfg);
    emit(ahmm::learn_json(rep, !learn_f.no_timing), learn_f.out);
    if (!learned_model.empty()) ahmm::save_model(ahmm::to_model(rep, in.unique), learned_model);
  } else if (*bw) {
    const auto y = ahmm::read_outputs_csv(bw_y);
    if (!bw_model.empty()) bw_cfg.model = ahmm::load_model(bw_model);
    if (bw_init == "from-model") bw_cfg.init = ahmm::BwInit::FromModel;
    else if (bw_init == "exact-emissions") bw_cfg.init = ahmm::BwInit::ExactEmissions;
    if (bw_cfg.init != ahmm::BwInit::Random && !bw_cfg.model)
      throw ahmm::ValidationError("--init " + bw_init + " requires --model");
    if (bw_n == 0 && bw_cfg.model) bw_n = bw_cfg.model->n();
    if (bw_n < 1) throw ahmm::ValidationError("--n is required without --model");
    const auto res = ahmm::baum_welch(y, bw_n, bw_cfg);
    ahmm::save_model(res.model, bw_out);
    if (!bw_trace.empty()) ahmm::write_text(bw_trace, ahmm::bw_trace_csv(res.loglik));
  } else if (*sw) {
    auto cfg = ahmm::sweep_config_from_json(ahmm::read_text(sw_config));
    if (sw_no_timing) cfg.timing = false;
    emit(ahmm::sweep_csv(ahmm::run_sweep(cfg, sw_threads)), sw_out);
  } else if (*cal) {
    const auto h = ahmm::load_model(cal_model);
    emit(ahmm::calibration_json(ahmm::calibrate_threshold(h, cal_len, cal_reps, cal_seed, cal_q, cal_exp, cal_threads)),
         cal_out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ahmm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
