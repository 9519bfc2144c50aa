#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sheafnn/matrix.hpp"

namespace sheafnn::data {

/// Spectra (one row per sample) with binary labels and sample ids.
struct SpectraDataset {
  Matrix spectra;
  std::vector<int> labels;
  std::vector<std::string> ids;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t positives() const noexcept;
  /// Throws ValidationError unless rows, labels and ids agree and labels are
  /// binary.
  void validate() const;
};

/// Reads `id,label,x0,...,x{p-1}`. Malformed rows raise ParseError with the
/// 1-based line number; labels outside {0,1} raise ValidationError.
SpectraDataset load_csv(const std::filesystem::path& path);
SpectraDataset parse_csv(std::string_view text);
std::string to_csv(const SpectraDataset& ds);
void save_csv(const SpectraDataset& ds, const std::filesystem::path& path);

/// Per-feature standardization followed by projection on the leading
/// principal directions, both fitted on one matrix.
struct PcaModel {
  std::vector<double> mean;
  std::vector<double> scale;
  Matrix components;  // n_points × k, orthonormal columns
  std::vector<double> explained_variance_ratio;

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.cols(); }
};

/// Fits the scaler and k principal components on `train`. Requires
/// train.rows() ≥ 2 and k ≤ min(rows − 1, cols).
PcaModel fit_scaler_pca(const Matrix& train, std::size_t k);
/// ((x − mean)/scale)·components.
Matrix transform(const PcaModel& model, const Matrix& x);
/// Maps scores back to the standardized input space (scores·componentsᵀ).
Matrix inverse_project(const PcaModel& model, const Matrix& scores);

enum class SyntheticPreset { separable, noisy };

std::string to_string(SyntheticPreset p);
SyntheticPreset parse_preset(std::string_view s);

inline constexpr std::size_t kSpectrumPoints = 501;
inline constexpr double kEnergyMinKeV = 4.02;
inline constexpr double kEnergyMaxKeV = 4.17;

/// XANES-like spectra on a 501-point energy grid: a sigmoid absorption edge
/// and Gaussian peaks whose positions and heights depend on the class, plus
/// smooth per-sample noise. Exactly round(n·tumor_fraction) samples are
/// labelled 1; the output is a pure function of the arguments.
SpectraDataset generate_synthetic(std::size_t n, double tumor_fraction, std::uint64_t seed,
                                  SyntheticPreset preset = SyntheticPreset::separable);

/// Distance between the two class-mean spectra divided by the mean distance
/// of samples to their own class mean.
double class_separation_ratio(const SpectraDataset& ds);

}  // namespace sheafnn::data
