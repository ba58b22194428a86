// Copyright 2026 The streamtune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Feature engineering: correlation-based selection, scaling, PCA and
// Varimax-rotated feature importance.

#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "streamtune/errors.hpp"

namespace streamtune {

/// Named-column sample matrix (rows are samples).
struct FeatureMatrix {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  /// Throws SchemaError unless rectangular, uniquely named and finite.
  void validate() const;
  std::size_t column(std::string_view name) const;
  FeatureMatrix select(const std::vector<std::string>& keep) const;
};

/// Sample Pearson correlation. Zero when exactly one argument is constant;
/// throws DomainError when both are.
double pearson(std::span<const double> x, std::span<const double> y);

inline constexpr double kCorrelationThreshold = 0.7;

/// Greedy pass in column order: a column is dropped when its |r| with any
/// already kept column exceeds the threshold. Constant columns carry no
/// information and are dropped as well.
std::vector<std::string> select_features(const FeatureMatrix& m, double threshold = kCorrelationThreshold);

enum class ScalerKind { kZScore, kMinMax };

/// Per-column statistics frozen at fit time: (mean, stddev) for z-score,
/// (min, max) for min-max.
struct Scaler {
  ScalerKind kind = ScalerKind::kZScore;
  std::vector<std::string> names;
  std::vector<double> first;
  std::vector<double> second;

  bool constant(std::size_t col) const;
  double apply(std::size_t col, double v) const;
  /// Inverse of apply for min-max columns (no clamping).
  double invert(std::size_t col, double v) const;
};

Scaler fit_scaler(const FeatureMatrix& m, ScalerKind kind);
std::vector<double> apply_scaler(const Scaler& s, std::span<const double> row);
FeatureMatrix apply_scaler(const Scaler& s, const FeatureMatrix& m);

/// Top principal directions of a (standardized) sample matrix.
struct PcaBasis {
  Eigen::MatrixXd components;          // k x d, orthonormal rows
  Eigen::VectorXd means;               // d
  Eigen::VectorXd explained_variance;  // k, non-increasing
  Eigen::VectorXd spectrum;            // d, all covariance eigenvalues
  std::size_t requested_components = 0;

  std::size_t size() const { return static_cast<std::size_t>(components.rows()); }
  bool rank_reduced() const { return size() < requested_components; }
  /// k x d loadings: components scaled by the root of their variance.
  Eigen::MatrixXd loadings() const;
};

inline constexpr std::size_t kDefaultPcaComponents = 9;

/// Keeps min(k, numerical rank) components; rank_reduced() reports when k
/// had to be lowered. Each component's largest-magnitude entry is positive.
PcaBasis pca_fit(const Eigen::MatrixXd& data, std::size_t k = kDefaultPcaComponents);
Eigen::VectorXd pca_transform(const PcaBasis& basis, const Eigen::VectorXd& row);

struct VarimaxResult {
  Eigen::MatrixXd loadings;   // rotated, k x d
  Eigen::MatrixXd rotation;   // k x k orthogonal, loadings = rotation * input
  Eigen::VectorXd importance; // d, sums to 1
  std::vector<double> criterion;  // value before the first sweep and after each sweep
};

/// Sum over factors of the variance of squared loadings across features.
double varimax_criterion(const Eigen::MatrixXd& loadings);

VarimaxResult varimax(const Eigen::MatrixXd& loadings, int max_iter = 100, double tol = 1e-6);

void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view text);

}  // namespace streamtune
