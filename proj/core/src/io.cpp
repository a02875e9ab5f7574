#include "ahmm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ahmm {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

Hmm model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
  try {
    const auto& rows = j.at("transition");
    const auto& ems = j.at("emissions");
    const int n = j.contains("n") ? j.at("n").get<int>() : static_cast<int>(ems.size());
    if (static_cast<int>(rows.size()) != n || static_cast<int>(ems.size()) != n)
      throw ValidationError("model JSON: 'n' disagrees with transition/emissions sizes");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != n)
        throw ValidationError("model JSON: transition row " + std::to_string(i + 1) + " has wrong length");
      for (int k = 0; k < n; ++k) a(i, k) = rows[i][k].get<double>();
    }
    std::vector<Gaussian> em;
    for (const auto& e : ems) em.push_back({e.at("mean").get<double>(), e.at("var").get<double>()});
    std::optional<Vector> init;
    if (j.contains("initial") && !j["initial"].is_null()) {
      const auto& p = j["initial"];
      if (static_cast<int>(p.size()) != n) throw ValidationError("model JSON: initial has wrong length");
      init = Vector(n);
      for (int i = 0; i < n; ++i) (*init)(i) = p[i].get<double>();
    }
    std::optional<std::pair<int, int>> pair;
    if (j.contains("aliased_pair") && !j["aliased_pair"].is_null()) {
      const auto& p = j["aliased_pair"];
      if (p.size() != 2) throw ValidationError("model JSON: aliased_pair needs two indices");
      pair = std::pair{p[0].get<int>() - 1, p[1].get<int>() - 1};
    }
    return Hmm(std::move(a), std::move(em), std::move(init), pair);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model JSON: ") + e.what());
  }
}

std::string model_to_json(const Hmm& h) {
  json j;
  const int n = h.n();
  j["n"] = n;
  json rows = json::array();
  for (int i = 0; i < n; ++i) {
    json row = json::array();
    for (int k = 0; k < n; ++k) row.push_back(h.transition()(i, k));
    rows.push_back(row);
  }
  j["transition"] = rows;
  json ems = json::array();
  for (const auto& e : h.emissions()) ems.push_back({{"mean", e.mean}, {"var", e.var}});
  j["emissions"] = ems;
  if (h.aliased_pair())
    j["aliased_pair"] = {h.aliased_pair()->first + 1, h.aliased_pair()->second + 1};
  if (h.initial()) {
    json p = json::array();
    for (int i = 0; i < n; ++i) p.push_back((*h.initial())(i));
    j["initial"] = p;
  }
  return j.dump(2) + "\n";
}

Hmm load_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

void save_model(const Hmm& h, const std::filesystem::path& path) { write_text(path, model_to_json(h)); }

namespace {

std::vector<std::string> csv_column(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw ValidationError(path.string() + ": expected header '" + header + "', got '" + line + "'");
  std::vector<std::string> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<double> read_outputs_csv(const std::filesystem::path& path) {
  std::vector<double> y;
  for (const auto& s : csv_column(path, "y")) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw ValidationError(path.string() + ": bad value '" + s + "'");
    y.push_back(v);
  }
  return y;
}

void write_outputs_csv(const std::filesystem::path& path, std::span<const double> y) {
  std::string buf = "y\n";
  char tmp[64];
  for (double v : y) {
    std::snprintf(tmp, sizeof tmp, "%.17g\n", v);
    buf += tmp;
  }
  write_text(path, buf);
}

std::vector<int> read_states_csv(const std::filesystem::path& path) {
  std::vector<int> x;
  for (const auto& s : csv_column(path, "x")) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 1) throw ValidationError(path.string() + ": bad state '" + s + "'");
    x.push_back(v - 1);
  }
  return x;
}

void write_states_csv(const std::filesystem::path& path, std::span<const int> x) {
  std::string buf = "x\n";
  for (int v : x) {
    buf += std::to_string(v + 1);
    buf += '\n';
  }
  write_text(path, buf);
}

}  // namespace ahmm
