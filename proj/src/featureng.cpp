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

#include "streamtune/featureng.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

namespace streamtune {

void FeatureMatrix::validate() const {
  if (static_cast<std::size_t>(values.cols()) != names.size()) {
    throw SchemaError("feature matrix has " + std::to_string(values.cols()) + " columns but " +
                      std::to_string(names.size()) + " names");
  }
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw SchemaError("duplicate feature column '" + n + "'");
  }
  if (!values.allFinite()) throw SchemaError("feature matrix contains non-finite values");
}

std::size_t FeatureMatrix::column(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw SchemaError("no feature column '" + std::string(name) + "'");
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::string>& keep) const {
  FeatureMatrix out;
  out.names = keep;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.values.col(static_cast<Eigen::Index>(j)) = values.col(static_cast<Eigen::Index>(column(keep[j])));
  }
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pearson needs equal-length vectors");
  if (x.size() < 2) throw InsufficientDataError("pearson needs at least 2 observations");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 && syy == 0.0) throw DomainError("correlation undefined for two constant vectors");
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::span<const double> column_span(const Eigen::MatrixXd& m, Eigen::Index j) {
  return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

bool is_constant(std::span<const double> col) {
  return std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); });
}

}  // namespace

std::vector<std::string> select_features(const FeatureMatrix& m, double threshold) {
  m.validate();
  std::vector<Eigen::Index> kept;
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
    const auto col = column_span(m.values, j);
    if (col.size() < 2 || is_constant(col)) continue;
    bool redundant = false;
    for (Eigen::Index k : kept) {
      if (std::abs(pearson(column_span(m.values, k), col)) > threshold) {
        redundant = true;
        break;
      }
    }
    if (!redundant) {
      kept.push_back(j);
      names.push_back(m.names[static_cast<std::size_t>(j)]);
    }
  }
  return names;
}

bool Scaler::constant(std::size_t col) const {
  return kind == ScalerKind::kZScore ? second[col] == 0.0 : first[col] == second[col];
}

double Scaler::apply(std::size_t col, double v) const {
  if (constant(col)) return 0.0;
  if (kind == ScalerKind::kZScore) return (v - first[col]) / second[col];
  return std::clamp((v - first[col]) / (second[col] - first[col]), 0.0, 1.0);
}

double Scaler::invert(std::size_t col, double v) const {
  if (kind == ScalerKind::kZScore) return constant(col) ? first[col] : v * second[col] + first[col];
  return constant(col) ? first[col] : v * (second[col] - first[col]) + first[col];
}

Scaler fit_scaler(const FeatureMatrix& m, ScalerKind kind) {
  m.validate();
  const Eigen::Index rows = m.values.rows();
  if (rows < 2) throw InsufficientDataError("scaler fit needs at least 2 rows");
  Scaler s;
  s.kind = kind;
  s.names = m.names;
  for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
    const auto col = m.values.col(j);
    if (kind == ScalerKind::kZScore) {
      const double mean = col.mean();
      const double var = (col.array() - mean).square().sum() / static_cast<double>(rows - 1);
      s.first.push_back(mean);
      s.second.push_back(std::sqrt(var));
    } else {
      s.first.push_back(col.minCoeff());
      s.second.push_back(col.maxCoeff());
    }
  }
  return s;
}

std::vector<double> apply_scaler(const Scaler& s, std::span<const double> row) {
  if (row.size() != s.names.size()) {
    throw SchemaError("scaler expects " + std::to_string(s.names.size()) + " columns, got " +
                      std::to_string(row.size()));
  }
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = s.apply(j, row[j]);
  return out;
}

FeatureMatrix apply_scaler(const Scaler& s, const FeatureMatrix& m) {
  if (m.names != s.names) throw SchemaError("feature columns do not match the fitted scaler");
  FeatureMatrix out = m;
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      out.values(i, j) = s.apply(static_cast<std::size_t>(j), m.values(i, j));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PCA

Eigen::MatrixXd PcaBasis::loadings() const {
  Eigen::MatrixXd l = components;
  for (Eigen::Index i = 0; i < l.rows(); ++i) l.row(i) *= std::sqrt(std::max(explained_variance(i), 0.0));
  return l;
}

PcaBasis pca_fit(const Eigen::MatrixXd& data, std::size_t k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (k < 1) throw DomainError("pca needs k >= 1");
  if (n < 2 || d < 1) throw InsufficientDataError("pca needs at least 2 rows and 1 column");
  if (!data.allFinite()) throw SchemaError("pca input contains non-finite values");

  PcaBasis basis;
  basis.requested_components = k;
  basis.means = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - basis.means.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw InvariantError("covariance eigendecomposition failed");
  // Eigen returns ascending eigenvalues; flip to descending.
  const Eigen::VectorXd evals = solver.eigenvalues().reverse();
  const Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

  basis.spectrum = evals.cwiseMax(0.0);
  const double top = std::max(evals(0), 0.0);
  const double floor = top * 1e-10 * static_cast<double>(d);
  Eigen::Index rank = 0;
  while (rank < d && evals(rank) > floor) ++rank;
  if (rank == 0) throw InsufficientDataError("pca input has zero variance");

  const Eigen::Index kept = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), rank);
  basis.components.resize(kept, d);
  basis.explained_variance.resize(kept);
  for (Eigen::Index i = 0; i < kept; ++i) {
    Eigen::VectorXd v = evecs.col(i);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.components.row(i) = v.transpose();
    basis.explained_variance(i) = evals(i);
  }
  return basis;
}

Eigen::VectorXd pca_transform(const PcaBasis& basis, const Eigen::VectorXd& row) {
  if (row.size() != basis.means.size()) {
    throw SchemaError("pca expects " + std::to_string(basis.means.size()) + " inputs, got " +
                      std::to_string(row.size()));
  }
  return basis.components * (row - basis.means);
}

// ---------------------------------------------------------------------------
// Varimax

double varimax_criterion(const Eigen::MatrixXd& loadings) {
  const double d = static_cast<double>(loadings.cols());
  double total = 0.0;
  for (Eigen::Index j = 0; j < loadings.rows(); ++j) {
    const Eigen::ArrayXd sq = loadings.row(j).array().square();
    const double m2 = sq.sum() / d;
    const double m4 = sq.square().sum() / d;
    total += m4 - m2 * m2;
  }
  return total;
}

namespace {

Eigen::VectorXd importance_of(const Eigen::MatrixXd& loadings) {
  Eigen::VectorXd imp = loadings.array().square().colwise().sum().transpose();
  const double sum = imp.sum();
  if (sum > 0.0) {
    imp /= sum;
  } else {
    imp.setConstant(1.0 / static_cast<double>(imp.size()));
  }
  return imp;
}

}  // namespace

VarimaxResult varimax(const Eigen::MatrixXd& loadings, int max_iter, double tol) {
  const Eigen::Index k = loadings.rows();
  const Eigen::Index d = loadings.cols();
  VarimaxResult r;
  r.loadings = loadings;
  r.rotation = Eigen::MatrixXd::Identity(k, k);
  r.criterion.push_back(varimax_criterion(loadings));
  if (k < 2 || d < 1) {
    r.importance = importance_of(loadings);
    return r;
  }

  const double n = static_cast<double>(d);
  for (int sweep = 0; sweep < max_iter; ++sweep) {
    for (Eigen::Index a = 0; a + 1 < k; ++a) {
      for (Eigen::Index b = a + 1; b < k; ++b) {
        const Eigen::ArrayXd x = r.loadings.row(a).array();
        const Eigen::ArrayXd y = r.loadings.row(b).array();
        const Eigen::ArrayXd u = x.square() - y.square();
        const Eigen::ArrayXd v = 2.0 * x * y;
        const double A = u.sum();
        const double B = v.sum();
        const double C = (u.square() - v.square()).sum();
        const double D = 2.0 * (u * v).sum();
        const double num = D - 2.0 * A * B / n;
        const double den = C - (A * A - B * B) / n;
        const double phi = 0.25 * std::atan2(num, den);
        if (phi == 0.0) continue;
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        const Eigen::RowVectorXd la = r.loadings.row(a);
        const Eigen::RowVectorXd lb = r.loadings.row(b);
        r.loadings.row(a) = c * la + s * lb;
        r.loadings.row(b) = -s * la + c * lb;
        const Eigen::RowVectorXd ra = r.rotation.row(a);
        const Eigen::RowVectorXd rb = r.rotation.row(b);
        r.rotation.row(a) = c * ra + s * rb;
        r.rotation.row(b) = -s * ra + c * rb;
      }
    }
    r.criterion.push_back(varimax_criterion(r.loadings));
    const double gain = r.criterion.back() - r.criterion[r.criterion.size() - 2];
    if (std::abs(gain) < tol) break;
  }
  r.importance = importance_of(r.loadings);
  return r;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_real(std::string_view text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected a real number, got '" + std::string(text) + "'", 0, 0);
  }
  return v;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
  m.validate();
  for (std::size_t j = 0; j < m.names.size(); ++j) out << (j ? "," : "") << m.names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << (j ? "," : "") << format_real(m.values(i, j));
    out << '\n';
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  FeatureMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty feature CSV", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (auto name : split_commas(line)) m.names.emplace_back(name);

  std::vector<double> flat;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != m.names.size()) {
      throw ParseError("expected " + std::to_string(m.names.size()) + " fields", line_no, 1);
    }
    for (auto f : fields) {
      try {
        flat.push_back(parse_real(f));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no, 1);
      }
    }
    ++rows;
  }
  m.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m.names.size()));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * m.names.size() + j];
    }
  }
  m.validate();
  return m;
}

}  // namespace streamtune
