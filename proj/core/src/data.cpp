#include "sheafnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "sheafnn/errors.hpp"
#include "sheafnn/io.hpp"
#include "sheafnn/linalg.hpp"
#include "sheafnn/random.hpp"

namespace sheafnn::data {

std::size_t SpectraDataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void SpectraDataset::validate() const {
  if (spectra.rows() != labels.size())
    throw ValidationError("dataset: " + std::to_string(spectra.rows()) + " spectra but " +
                          std::to_string(labels.size()) + " labels");
  if (ids.size() != labels.size())
    throw ValidationError("dataset: " + std::to_string(ids.size()) + " ids but " +
                          std::to_string(labels.size()) + " labels");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("dataset: label of sample " + ids[i] + " is not 0 or 1");
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

SpectraDataset parse_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      const std::size_t nl = text.find('\n', start);
      const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
      lines.push_back(text.substr(start, end - start));
      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
  }
  if (lines.empty() || trim(lines[0]).empty()) throw ParseError(1, "missing header");
  const auto header = split_fields(trim(lines[0]));
  if (header.size() < 3 || trim(header[0]) != "id" || trim(header[1]) != "label")
    throw ParseError(1, "header must be id,label,x0,...");
  const std::size_t p = header.size() - 2;

  SpectraDataset ds;
  std::vector<double> values;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string_view line = trim(lines[li]);
    if (line.empty()) continue;
    const std::size_t line_no = li + 1;
    const auto fields = split_fields(line);
    if (fields.size() != p + 2)
      throw ParseError(line_no, "expected " + std::to_string(p + 2) + " fields, found " +
                                    std::to_string(fields.size()));
    const std::string_view id = trim(fields[0]);
    if (id.empty()) throw ParseError(line_no, "empty id");
    double label = 0.0;
    if (!parse_number(trim(fields[1]), label))
      throw ParseError(line_no, "label is not a number");
    if (label != 0.0 && label != 1.0)
      throw ValidationError("line " + std::to_string(line_no) + ": label must be 0 or 1");
    for (std::size_t j = 0; j < p; ++j) {
      double x = 0.0;
      if (!parse_number(trim(fields[j + 2]), x) || !std::isfinite(x))
        throw ParseError(line_no, "column " + std::to_string(j + 2) + " is not a finite number");
      values.push_back(x);
    }
    ds.ids.emplace_back(id);
    ds.labels.push_back(static_cast<int>(label));
  }
  ds.spectra = Matrix(ds.labels.size(), p, std::move(values));
  return ds;
}

SpectraDataset load_csv(const std::filesystem::path& path) {
  return parse_csv(read_file(path));
}

std::string to_csv(const SpectraDataset& ds) {
  ds.validate();
  std::string out = "id,label";
  for (std::size_t j = 0; j < ds.spectra.cols(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out += ds.ids[i];
    out += ',';
    out += std::to_string(ds.labels[i]);
    for (double x : ds.spectra.row(i)) {
      out += ',';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

void save_csv(const SpectraDataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(ds));
}

PcaModel fit_scaler_pca(const Matrix& train, std::size_t k) {
  const std::size_t n = train.rows();
  const std::size_t p = train.cols();
  if (n < 2) throw ContractError("fit_scaler_pca: need at least 2 rows");
  if (k == 0 || k > std::min(n - 1, p))
    throw ContractError("fit_scaler_pca: k=" + std::to_string(k) + " exceeds min(rows-1, cols)=" +
                        std::to_string(std::min(n - 1, p)));
  if (!train.all_finite()) throw ContractError("fit_scaler_pca: non-finite input");

  PcaModel model;
  model.mean.assign(p, 0.0);
  model.scale.assign(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) model.mean[j] += train(i, j);
  for (double& m : model.mean) m /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      const double c = train(i, j) - model.mean[j];
      model.scale[j] += c * c;
    }
  for (double& s : model.scale) s = std::max(std::sqrt(s / static_cast<double>(n)), 1e-12);

  Matrix z(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) z(i, j) = (train(i, j) - model.mean[j]) / model.scale[j];

  const SymEig eig = sym_eig(matmul_nt(z, z), 1e-8);
  double total = 0.0;
  for (double v : eig.values) total += std::max(v, 0.0);
  if (!(total > 0.0)) throw NumericError("fit_scaler_pca: training data has zero variance");

  model.components = Matrix(p, k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t e = n - 1 - c;  // descending order
    const double lambda = eig.values[e];
    if (!(lambda > 1e-12 * total))
      throw NumericError("fit_scaler_pca: component " + std::to_string(c) +
                         " has zero variance (rank-deficient training data)");
    model.explained_variance_ratio.push_back(lambda / total);
    // v = zᵀu/√λ is the unit right singular vector paired with u.
    const double inv = 1.0 / std::sqrt(lambda);
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += z(i, j) * eig.vectors(i, e);
      model.components(j, c) = acc * inv;
      if (std::abs(model.components(j, c)) > best + 1e-12) {
        best = std::abs(model.components(j, c));
        arg = j;
      }
    }
    if (model.components(arg, c) < 0.0)
      for (std::size_t j = 0; j < p; ++j) model.components(j, c) = -model.components(j, c);
  }
  return model;
}

Matrix transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim())
    throw ShapeError("transform: input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  Matrix z(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) z(i, j) = (x(i, j) - model.mean[j]) / model.scale[j];
  return matmul(z, model.components);
}

Matrix inverse_project(const PcaModel& model, const Matrix& scores) {
  if (scores.cols() != model.output_dim())
    throw ShapeError("inverse_project: scores have " + std::to_string(scores.cols()) +
                     " columns, model has " + std::to_string(model.output_dim()));
  return matmul_nt(scores, model.components);
}

std::string to_string(SyntheticPreset p) {
  return p == SyntheticPreset::separable ? "separable" : "noisy";
}

SyntheticPreset parse_preset(std::string_view s) {
  if (s == "separable") return SyntheticPreset::separable;
  if (s == "noisy") return SyntheticPreset::noisy;
  throw ValidationError("unknown synthetic preset '" + std::string(s) + "'");
}

namespace {

struct Shape {
  double edge_center;
  double white_line_center;
  double white_line_height;
  double second_peak_center;
  double second_peak_height;
};

// Class 0 (control) and class 1 (tumour) differ by a small shift of the
// edge and white line and by the relative peak heights.
constexpr Shape kClassShape[2] = {
    {4.0380, 4.0410, 0.60, 4.0600, 0.25},
    {4.0386, 4.0418, 0.68, 4.0612, 0.20},
};

struct NoiseLevel {
  double edge_jitter;  // keV
  double gain_jitter;  // relative
  double smooth;       // amplitude of the low-frequency wander
  double white;        // per-point noise
};

NoiseLevel noise_for(SyntheticPreset p) {
  if (p == SyntheticPreset::separable) return {0.00004, 0.002, 0.0015, 0.0005};
  return {0.0003, 0.02, 0.015, 0.003};
}

double gaussian(double e, double mu, double sigma) {
  const double t = (e - mu) / sigma;
  return std::exp(-0.5 * t * t);
}

}  // namespace

SpectraDataset generate_synthetic(std::size_t n, double tumor_fraction, std::uint64_t seed,
                                  SyntheticPreset preset) {
  if (!(tumor_fraction > 0.0 && tumor_fraction < 1.0))
    throw ContractError("generate_synthetic: tumor_fraction must lie in (0, 1)");
  const auto positives = static_cast<std::size_t>(std::llround(static_cast<double>(n) * tumor_fraction));

  SpectraDataset ds;
  ds.labels.assign(n, 0);
  std::fill_n(ds.labels.begin(), std::min(positives, n), 1);
  Rng label_rng(derive_seed(seed, {0}));
  shuffle(ds.labels, label_rng);

  const NoiseLevel noise = noise_for(preset);
  constexpr std::size_t p = kSpectrumPoints;
  constexpr std::size_t harmonics = 8;
  const double step = (kEnergyMaxKeV - kEnergyMinKeV) / static_cast<double>(p - 1);
  ds.spectra = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, {1, i}));
    const Shape& s = kClassShape[ds.labels[i]];
    const double shift = noise.edge_jitter * standard_normal(rng);
    const double gain = 1.0 + noise.gain_jitter * standard_normal(rng);
    double amp[harmonics];
    double phase[harmonics];
    for (std::size_t h = 0; h < harmonics; ++h) {
      amp[h] = noise.smooth * standard_normal(rng) / static_cast<double>(h + 1);
      phase[h] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    }
    for (std::size_t j = 0; j < p; ++j) {
      const double e = kEnergyMinKeV + step * static_cast<double>(j) - shift;
      const double t = static_cast<double>(j) / static_cast<double>(p - 1);
      double mu = 1.0 / (1.0 + std::exp(-(e - s.edge_center) / 0.0015));
      mu += s.white_line_height * gaussian(e, s.white_line_center, 0.0025);
      mu += s.second_peak_height * gaussian(e, s.second_peak_center, 0.007);
      mu += 0.08 * gaussian(e, 4.1000, 0.015);
      mu *= gain;
      for (std::size_t h = 0; h < harmonics; ++h)
        mu += amp[h] * std::sin(std::numbers::pi * static_cast<double>(h + 1) * t + phase[h]);
      mu += noise.white * standard_normal(rng);
      ds.spectra(i, j) = mu;
    }
    ds.ids.push_back("s" + std::to_string(i));
  }
  return ds;
}

double class_separation_ratio(const SpectraDataset& ds) {
  ds.validate();
  const std::size_t p = ds.spectra.cols();
  std::vector<double> mean[2] = {std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  std::size_t count[2] = {0, 0};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int c = ds.labels[i];
    ++count[c];
    for (std::size_t j = 0; j < p; ++j) mean[c][j] += ds.spectra(i, j);
  }
  if (count[0] == 0 || count[1] == 0) throw ContractError("class_separation_ratio: need both classes");
  for (int c = 0; c < 2; ++c)
    for (double& m : mean[c]) m /= static_cast<double>(count[c]);
  double between = 0.0;
  for (std::size_t j = 0; j < p; ++j) between += (mean[0][j] - mean[1][j]) * (mean[0][j] - mean[1][j]);
  double within = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& m = mean[ds.labels[i]];
    double d2 = 0.0;
    for (std::size_t j = 0; j < p; ++j) d2 += (ds.spectra(i, j) - m[j]) * (ds.spectra(i, j) - m[j]);
    within += std::sqrt(d2);
  }
  within /= static_cast<double>(ds.size());
  return std::sqrt(between) / within;
}

}  // namespace sheafnn::data
