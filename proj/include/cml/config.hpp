#pragma once

// Experiment description read from a flat `key = value` file. Lists are
// comma separated; an element `a:b` is an inclusive integer range and
// `a:b:step` an inclusive arithmetic range. `#` starts a comment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cml/lattice.hpp"
#include "cml/observables.hpp"

namespace cml {

struct ExperimentConfig {
  int map_slope = 3;
  double map_offset = 0.0;
  std::vector<std::size_t> n{2};
  std::vector<double> gamma{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  std::size_t length = 10000;
  std::size_t burn_in = 1000;
  double quantile = 0.98;
  std::vector<double> noise{0.0};
  /// global | local | local_ring | localization | block
  std::string observable = "global";
  /// Diagonal localization target (x, .., x).
  double target = 0.5;
  /// Sites per block for the block observable.
  std::size_t block = 2;
  std::size_t realizations = 10;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::size_t threads = 1;

  // Return-time and counting statistics.
  double accuracy = 0.01;
  std::size_t k_max = 50;
  std::size_t k_sum = 0;
  std::vector<double> t{1.0};
  std::size_t ensemble = 2000;
  std::size_t calibration = 1000000;

  // Extreme-value fits.
  std::size_t gev_block = 100;
  std::size_t min_exceedances = 30;

  // Density estimation.
  std::size_t bins = 100;
  std::size_t density_realizations = 300;
  std::size_t density_iterations = 10000;
  double band = 0.02;

  // Ulam operator.
  std::size_t ulam_k = 300;
  std::size_t samples_per_axis = 12;
  std::vector<double> nu{0.04, 0.02, 0.01};

  std::size_t excerpt = 1000;
  bool full_scale = false;

  LocalMap local_map() const { return LocalMap::affine_mod1(map_slope, map_offset); }
  MapSpec map_spec(std::size_t lattice_size, double coupling) const {
    return MapSpec(local_map(), lattice_size, coupling);
  }
  ObservableSpec observable_spec(std::size_t lattice_size) const;
};

/// Parses and validates; throws ConfigError naming the offending line.
/// Non-fatal remarks (e.g. gamma above 2/3) are appended to `warnings`.
ExperimentConfig parse_config(const std::string& text, std::vector<std::string>* warnings = nullptr);

/// Reads a key-value file, or the `config` member of a manifest.json.
ExperimentConfig load_config(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

/// Canonical text; parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig& config);

/// Throws ConfigError for invalid values; returns warnings.
std::vector<std::string> validate(const ExperimentConfig& config);

}  // namespace cml
