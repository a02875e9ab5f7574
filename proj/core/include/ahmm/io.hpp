#pragma once

// File formats.
//
// Model (JSON):
//   {"n": 4,
//    "transition": [[...], ...],        row-major, transition[i][j] = P(i | j)
//    "emissions": [{"mean": 3, "var": 1}, ...],
//    "aliased_pair": [3, 4],            optional, 1-based
//    "initial": [...]}                  optional
//
// Outputs (CSV): header "y", one real per line.
// States (CSV): header "x", one 1-based state index per line.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ahmm/hmm.hpp"

namespace ahmm {

Hmm model_from_json(const std::string& text);
std::string model_to_json(const Hmm& h);

Hmm load_model(const std::filesystem::path& path);
void save_model(const Hmm& h, const std::filesystem::path& path);

std::vector<double> read_outputs_csv(const std::filesystem::path& path);
void write_outputs_csv(const std::filesystem::path& path, std::span<const double> y);

/// Reads 1-based indices and returns them 0-based.
std::vector<int> read_states_csv(const std::filesystem::path& path);
/// Takes 0-based states and writes them 1-based.
void write_states_csv(const std::filesystem::path& path, std::span<const int> x);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ahmm
