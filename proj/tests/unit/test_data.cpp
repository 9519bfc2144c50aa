#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "oracles.hpp"
#include "sheafnn/data.hpp"
#include "sheafnn/errors.hpp"
#include "sheafnn/linalg.hpp"

using namespace sheafnn;
using namespace sheafnn::data;

TEST(Csv, ParsesWellFormedInput) {
  const auto ds = parse_csv("id,label,x0,x1\r\na,1,0.5,-2\n\nb, 0 ,1e-3,+4\n");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.labels, (std::vector<int>{1, 0}));
  EXPECT_EQ(ds.spectra, (Matrix{{0.5, -2}, {1e-3, 4}}));
  EXPECT_EQ(ds.positives(), 1u);
}

TEST(Csv, ReportsLineNumbers) {
  try {
    parse_csv("id,label,x0\na,1,0.5\nb,0,oops\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_csv("id,label,x0,x1\na,1,0.5\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_csv(""), ParseError);
  EXPECT_THROW(parse_csv("name,label,x0\n"), ParseError);
  EXPECT_THROW(parse_csv("id,label,x0\na,2,0.5\n"), ValidationError);
  EXPECT_THROW(parse_csv("id,label,x0\na,1,nan\n"), ParseError);
}

TEST(Csv, RoundTripsExactly) {
  const auto ds = generate_synthetic(12, 0.5, 3);
  const auto path = std::filesystem::temp_directory_path() / "sheafnn_csv_test.csv";
  save_csv(ds, path);
  const auto back = load_csv(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.spectra, ds.spectra);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.ids, ds.ids);
}

TEST(Dataset, Validation) {
  SpectraDataset ds{Matrix(2, 3), {0, 1}, {"a"}};
  EXPECT_THROW(ds.validate(), ValidationError);
  ds.ids.push_back("b");
  EXPECT_NO_THROW(ds.validate());
  ds.labels[0] = 3;
  EXPECT_THROW(ds.validate(), ValidationError);
}

TEST(Pca, MatchesCovarianceEigenOracle) {
  Rng rng(30);
  const std::size_t n = 15, p = 6, k = 4;
  Matrix x = oracle::random_matrix(n, p, rng);
  for (std::size_t i = 0; i < n; ++i) x(i, 1) += 3.0 * x(i, 0);  // correlated columns
  const PcaModel model = fit_scaler_pca(x, k);

  // Oracle: eigenvectors of the covariance of the standardized data.
  Matrix z(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x(i, j) / n;
    for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean) / n;
    for (std::size_t i = 0; i < n; ++i) z(i, j) = (x(i, j) - mean) / std::sqrt(var);
    EXPECT_NEAR(model.mean[j], mean, 1e-12);
    EXPECT_NEAR(model.scale[j], std::sqrt(var), 1e-12);
  }
  const oracle::Eig eig = oracle::jacobi_eig(oracle::matmul(oracle::transpose(z), z));
  double total = 0.0;
  for (double v : eig.values) total += v;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t e = p - 1 - c;
    EXPECT_NEAR(model.explained_variance_ratio[c], eig.values[e] / total, 1e-10);
    double dot = 0.0;
    for (std::size_t j = 0; j < p; ++j) dot += model.components(j, c) * eig.vectors(j, e);
    EXPECT_NEAR(std::abs(dot), 1.0, 1e-9);
  }
}

TEST(Pca, ComponentsOrthonormalWithSignConvention) {
  Rng rng(31);
  const Matrix x = oracle::random_matrix(20, 8, rng);
  const PcaModel m = fit_scaler_pca(x, 5);
  EXPECT_LT(max_abs_diff(matmul_tn(m.components, m.components), Matrix::identity(5)), 1e-10);
  for (std::size_t c = 0; c < 5; ++c) {
    std::size_t arg = 0;
    for (std::size_t j = 0; j < 8; ++j)
      if (std::abs(m.components(j, c)) > std::abs(m.components(arg, c))) arg = j;
    EXPECT_GT(m.components(arg, c), 0.0);
    if (c > 0) EXPECT_GE(m.explained_variance_ratio[c - 1], m.explained_variance_ratio[c]);
  }
}

TEST(Pca, TransformedTrainingScoresAreCentredAndUncorrelated) {
  Rng rng(32);
  const Matrix x = oracle::random_matrix(30, 5, rng);
  const PcaModel m = fit_scaler_pca(x, 3);
  const Matrix s = transform(m, x);
  const Matrix cov = matmul_tn(s, s);
  for (std::size_t a = 0; a < 3; ++a) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += s(i, a);
    EXPECT_NEAR(mean, 0.0, 1e-10);
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) EXPECT_NEAR(cov(a, b), 0.0, 1e-9);
  }
  // Full-rank projection is invertible in the standardized space.
  const PcaModel full = fit_scaler_pca(x, 5);
  const Matrix back = inverse_project(full, transform(full, x));
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      EXPECT_NEAR(back(i, j), (x(i, j) - full.mean[j]) / full.scale[j], 1e-9);
}

TEST(Pca, RejectsBadArguments) {
  EXPECT_THROW(fit_scaler_pca(Matrix(1, 3, 1.0), 1), ContractError);
  EXPECT_THROW(fit_scaler_pca(Matrix(4, 3, 1.0), 4), ContractError);
  EXPECT_THROW(fit_scaler_pca(Matrix(4, 3, 1.0), 0), ContractError);
  EXPECT_THROW(fit_scaler_pca(Matrix(4, 3, 1.0), 1), NumericError);
  Rng rng(0);
  const PcaModel m = fit_scaler_pca(oracle::random_matrix(5, 3, rng), 2);
  EXPECT_THROW(transform(m, Matrix(2, 4)), ShapeError);
}

TEST(Synthetic, ShapeLabelsAndDeterminism) {
  const auto a = generate_synthetic(224, 147.0 / 224.0, 5);
  EXPECT_EQ(a.spectra.rows(), 224u);
  EXPECT_EQ(a.spectra.cols(), kSpectrumPoints);
  EXPECT_EQ(a.positives(), 147u);
  EXPECT_EQ(a.ids[3], "s3");
  EXPECT_TRUE(a.spectra.all_finite());
  const auto b = generate_synthetic(224, 147.0 / 224.0, 5);
  EXPECT_EQ(a.spectra, b.spectra);
  EXPECT_EQ(a.labels, b.labels);
  const auto c = generate_synthetic(224, 147.0 / 224.0, 6);
  EXPECT_NE(a.spectra, c.spectra);
}

TEST(Synthetic, PresetsDifferInDifficulty) {
  for (std::uint64_t seed : {1, 2, 3}) {
    const double easy = class_separation_ratio(generate_synthetic(224, 147.0 / 224.0, seed, SyntheticPreset::separable));
    const double hard = class_separation_ratio(generate_synthetic(224, 147.0 / 224.0, seed, SyntheticPreset::noisy));
    EXPECT_GT(easy, 5.0);
    EXPECT_LT(hard, 3.0);
    EXPECT_GT(hard, 0.5);
  }
}

TEST(Synthetic, PresetNames) {
  EXPECT_EQ(parse_preset("noisy"), SyntheticPreset::noisy);
  EXPECT_EQ(to_string(SyntheticPreset::separable), "separable");
  EXPECT_THROW(parse_preset("easy"), ValidationError);
}
