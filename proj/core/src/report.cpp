#include "ahmm/report.hpp"

#include <cmath>

#include "json.hpp"

namespace ahmm {

using nlohmann::json;

namespace {

// Infinite bounds have no JSON literal; they are written as null.
json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json mat(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(real(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vec(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(real(v(i)));
  return out;
}

json one_based(const std::vector<int>& idx) {
  json out = json::array();
  for (int i : idx) out.push_back(i + 1);
  return out;
}

json decomposition(const AliasDecomposition& d) {
  return {{"merged", mat(d.merged)},   {"beta", d.beta},          {"alpha", vec(d.alpha)},
          {"delta_out", vec(d.delta_out)}, {"delta_in", vec(d.delta_in)}, {"kappa", d.kappa}};
}

json region(const FeasibleRegion& r) {
  auto curve = [](const BoundaryCurve& c) { return json{{"a", c.a}, {"b", c.b}, {"c", c.c}, {"d", c.d}}; };
  return {{"swapped", r.swapped},
          {"into_hi", r.into_hi},
          {"into_lo", r.into_lo},
          {"alpha_hi", r.alpha_hi},
          {"alpha_lo", r.alpha_lo},
          {"tau_min_hi", real(r.tau_min_hi)},
          {"tau_max_hi", real(r.tau_max_hi)},
          {"tau_min_lo", real(r.tau_min_lo)},
          {"tau_max_lo", real(r.tau_max_lo)},
          {"tau_minus", real(r.tau_minus)},
          {"tau_plus", real(r.tau_plus)},
          {"branch", r.branch == RegionBranch::Rectangle ? "rectangle" : "curved"},
          {"degenerate", r.degenerate},
          {"empty_block", r.empty_block},
          {"g", curve(r.g)},
          {"f", curve(r.f)},
          {"singleton", r.singleton}};
}

json effective(const EffectiveRegion& e) {
  json diagrams = json::array();
  for (const auto& d : e.diagrams) {
    json cons = json::array();
    for (const auto& h : d.constraints) cons.push_back({{"a", h.a}, {"b", h.b}});
    diagrams.push_back({{"table", to_string(d.table)},
                        {"state", d.state < 0 ? json(nullptr) : json(d.state + 1)},
                        {"trigger", d.trigger},
                        {"constraints", cons}});
  }
  return {{"swapped", e.swapped},
          {"diagrams", diagrams},
          {"shape", to_string(e.shape)},
          {"identifiable", e.identifiable},
          {"warnings", e.warnings}};
}

}  // namespace

std::string matrix_json(const Matrix& m) { return mat(m).dump(); }

std::string analysis_json(const AnalysisReport& rep, const Hmm& h) {
  json j;
  json violations = json::array();
  for (const auto& v : rep.validation.violations)
    violations.push_back({{"kind", to_string(v.kind)}, {"message", v.message}});
  j["validation"] = {{"ok", rep.validation.ok()}, {"violations", violations}, {"warnings", rep.validation.warnings}};
  j["n"] = h.n();
  j["aliased_pair"] = h.aliased_pair() ? json{h.aliased_pair()->first + 1, h.aliased_pair()->second + 1}
                                        : json(nullptr);
  j["canonical_order"] = one_based(rep.order);
  if (rep.minimality) {
    const auto& m = *rep.minimality;
    j["minimal"] = m.minimal;
    j["minimality"] = {
        {"start_case", m.start_case == StartCase::DistinctSplit ? "distinct-split" : "stationary-split"},
        {"delta_out_norm", m.delta_out_norm},
        {"delta_in_norm", m.delta_in_norm},
        {"failed", m.failed.empty() ? json(nullptr) : json(m.failed)}};
  } else {
    j["minimal"] = rep.validation.ok() && !h.is_aliased() ? json(true) : json(nullptr);
  }
  if (rep.decomposition) j["decomposition"] = decomposition(*rep.decomposition);
  if (rep.region) j["feasible_region"] = region(*rep.region);
  if (rep.effective) j["effective_region"] = effective(*rep.effective);
  j["identifiable"] = rep.identifiable;
  j["notes"] = rep.notes;
  return j.dump(2) + "\n";
}

std::string learn_json(const LearnReport& rep, bool timing) {
  json j;
  const auto& d = rep.detection;
  j["detection"] = {{"sigma_hat", d.sigma_hat},
                    {"sigma_second", d.sigma_second},
                    {"threshold", d.threshold},
                    {"verdict", d.aliased ? "2-aliased" : "non-aliased"},
                    {"u_hat", vec(d.u_hat)},
                    {"v_hat", vec(d.v_hat)}};
  if (rep.identification) {
    j["aliased_component"] = rep.identification->index + 1;
    j["component_scores"] = vec(rep.identification->scores);
    j["kappa_hat"] = rep.kappa_hat;
    j["gamma_hat"] = rep.gamma_hat;
    j["beta_hat"] = rep.beta_hat;
    j["objective"] = rep.objective;
    j["sign_flipped"] = rep.flipped;
  } else {
    j["aliased_component"] = nullptr;
  }
  j["a_hat"] = mat(rep.a_hat);
  j["state_components"] = one_based(rep.state_components);
  j["negativity_mass"] = rep.negativity_mass;
  if (timing) {
    const auto& t = rep.timing;
    j["timing_ms"] = {{"moments", t.moments_ms}, {"detect", t.detect_ms},     {"identify", t.identify_ms},
                      {"optimize", t.optimize_ms}, {"assemble", t.assemble_ms}, {"total", t.total_ms}};
  }
  j["warnings"] = rep.warnings;
  return j.dump(2) + "\n";
}

std::string moments_json(const MomentSet& m) {
  json j;
  j["provenance"] = m.provenance == Provenance::Population ? "population" : "empirical";
  j["T"] = m.length;
  j["kernel"] = mat(m.kernel);
  j["pi_merged"] = vec(m.pi_merged);
  auto list = [](const auto& xs) {
    json out = json::array();
    for (const auto& x : xs) out.push_back(mat(x));
    return out;
  };
  j["raw_m"] = list(m.raw_m);
  j["raw_g"] = list(m.raw_g);
  j["m"] = list(m.m);
  j["g"] = list(m.g);
  j["dm2"] = mat(m.dm2);
  j["dm3"] = mat(m.dm3);
  j["dg"] = list(m.dg);
  return j.dump(2) + "\n";
}

std::string calibration_json(const CalibrationResult& c) {
  json j{{"T", c.length},
         {"replicates", c.replicates},
         {"quantile", c.quantile},
         {"sigma_quantile", c.sigma_quantile},
         {"exponent", c.exponent},
         {"c_h", c.c_h},
         {"sigmas", c.sigmas}};
  return j.dump(2) + "\n";
}

}  // namespace ahmm
