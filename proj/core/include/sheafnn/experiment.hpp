#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "sheafnn/config.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/pipeline.hpp"

namespace sheafnn::pipeline {

/// Synthetic dataset recipe used when an experiment names no CSV file.
struct SyntheticSource {
  data::SyntheticPreset preset = data::SyntheticPreset::separable;
  std::size_t n = 224;
  double tumor_fraction = 147.0 / 224.0;
  std::uint64_t seed = 0;
};

/// Contents of an experiment.json file:
///
///   {
///     "dataset": "spectra.csv" | {"synthetic": {"preset": "noisy", "n": 224,
///                                               "tumor_fraction": 0.65625, "seed": 1}},
///     "model": "sheaf",
///     "grid": "full" | "best" | {"lr": [0.01, 0.05], ...},
///     "base": {"epochs": 200, ...},
///     "k": 10, "repetitions": 5, "seed": 0, "pca_components": 50,
///     "output_dir": "results"
///   }
///
/// Relative paths resolve against the directory holding the file.
struct Experiment {
  std::optional<std::filesystem::path> dataset_path;
  SyntheticSource synthetic;
  GridSpec grid;
  CvOptions options;
  std::optional<std::filesystem::path> output_dir;  // unset: caller decides

  data::SpectraDataset load_dataset() const;
  ordered_json to_json() const;
};

Experiment parse_experiment(const json& j, const std::filesystem::path& base_dir = {});
Experiment load_experiment(const std::filesystem::path& path);

}  // namespace sheafnn::pipeline
