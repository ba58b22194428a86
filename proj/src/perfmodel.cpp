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

#include "streamtune/perfmodel.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "streamtune/random.hpp"

namespace streamtune {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw DomainError("Adam betas must lie in (0,1)");
  }
  if (!(epsilon > 0.0)) throw DomainError("Adam epsilon must be positive");
  if (epochs < 1) throw DomainError("epochs must be positive");
  if (batch_size < 1) throw DomainError("batch size must be positive");
}

// ---------------------------------------------------------------------------
// MLP

namespace {

constexpr std::size_t kMaxWidth = 256;

std::vector<std::size_t> layer_widths(const MlpSpec& spec) {
  if (spec.input_dim < 1) throw DomainError("MLP input dimension must be >= 1");
  std::vector<std::size_t> w{spec.input_dim};
  for (auto h : spec.hidden) {
    if (h < 1) throw DomainError("hidden layer widths must be >= 1");
    w.push_back(h);
  }
  w.push_back(1);
  for (auto x : w) {
    if (x > kMaxWidth) throw DomainError("layer width exceeds " + std::to_string(kMaxWidth));
  }
  return w;
}

std::size_t parameter_count(const std::vector<std::size_t>& widths) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) n += widths[l] * widths[l - 1] + widths[l];
  return n;
}

// Activations of every layer for one sample, stored back to back.
struct Workspace {
  std::vector<double> act;
  std::vector<double> delta;
  std::vector<double> next_delta;
};

}  // namespace

Mlp::Mlp(const MlpSpec& spec) : widths_(layer_widths(spec)), params_(parameter_count(widths_), 0.0) {
  Rng rng(spec.init_seed);
  std::size_t off = 0;
  for (std::size_t l = 1; l < widths_.size(); ++l) {
    const std::size_t in = widths_[l - 1];
    const std::size_t out = widths_[l];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (std::size_t i = 0; i < in * out; ++i) params_[off + i] = rng.uniform(-limit, limit);
    off += in * out + out;  // biases stay zero
  }
}

Mlp Mlp::zeros(const MlpSpec& spec) {
  Mlp m;
  m.widths_ = layer_widths(spec);
  m.params_.assign(parameter_count(m.widths_), 0.0);
  return m;
}

Mlp Mlp::from_parts(std::vector<std::size_t> widths, std::vector<double> params) {
  if (widths.size() < 2 || widths.back() != 1) throw SchemaError("MLP needs an input layer and one output unit");
  for (auto w : widths) {
    if (w < 1 || w > kMaxWidth) throw SchemaError("invalid MLP layer width");
  }
  if (params.size() != parameter_count(widths)) throw SchemaError("MLP parameter count does not match widths");
  Mlp m;
  m.widths_ = std::move(widths);
  m.params_ = std::move(params);
  return m;
}

double Mlp::forward(std::span<const double> x) const {
  if (x.size() != input_dim() || widths_.empty()) {
    throw SchemaError("MLP expects " + std::to_string(input_dim()) + " inputs, got " + std::to_string(x.size()));
  }
  double buf_a[kMaxWidth];
  double buf_b[kMaxWidth];
  std::copy(x.begin(), x.end(), buf_a);
  double* cur = buf_a;
  double* nxt = buf_b;
  const double* p = params_.data();
  const std::size_t layers = widths_.size() - 1;
  for (std::size_t l = 1; l <= layers; ++l) {
    const std::size_t in = widths_[l - 1];
    const std::size_t out = widths_[l];
    const double* w = p;
    const double* b = p + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * cur[i];
      nxt[o] = l == layers ? z : std::tanh(z);
    }
    p += in * out + out;
    std::swap(cur, nxt);
  }
  return cur[0];
}

namespace {

double backprop(const std::vector<std::size_t>& widths, const std::vector<double>& params,
                std::span<const double> x, double target, std::span<double> grad, Workspace& ws) {
  const std::size_t layers = widths.size() - 1;
  std::size_t total = 0;
  for (auto w : widths) total += w;
  ws.act.resize(total);
  std::copy(x.begin(), x.end(), ws.act.begin());

  // Forward, keeping every layer's activations.
  std::size_t act_off = 0;
  std::size_t par_off = 0;
  for (std::size_t l = 1; l <= layers; ++l) {
    const std::size_t in = widths[l - 1];
    const std::size_t out = widths[l];
    const double* a_in = ws.act.data() + act_off;
    double* a_out = ws.act.data() + act_off + in;
    const double* w = params.data() + par_off;
    const double* b = w + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      double z = b[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) z += row[i] * a_in[i];
      a_out[o] = l == layers ? z : std::tanh(z);
    }
    act_off += in;
    par_off += in * out + out;
  }
  const double y = ws.act[total - 1];
  const double err = y - target;

  // Backward.
  ws.delta.assign(1, 2.0 * err);
  for (std::size_t l = layers; l >= 1; --l) {
    const std::size_t in = widths[l - 1];
    const std::size_t out = widths[l];
    act_off -= in;
    par_off -= in * out + out;
    const double* a_in = ws.act.data() + act_off;
    const double* w = params.data() + par_off;
    double* gw = grad.data() + par_off;
    double* gb = gw + in * out;
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      double* grow = gw + o * in;
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * a_in[i];
      gb[o] += d;
    }
    if (l == 1) break;
    ws.next_delta.assign(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double d = ws.delta[o];
      const double* row = w + o * in;
      for (std::size_t i = 0; i < in; ++i) ws.next_delta[i] += row[i] * d;
    }
    for (std::size_t i = 0; i < in; ++i) ws.next_delta[i] *= 1.0 - a_in[i] * a_in[i];
    std::swap(ws.delta, ws.next_delta);
  }
  return err * err;
}

}  // namespace

double Mlp::accumulate_gradient(std::span<const double> x, double target, std::span<double> grad) const {
  if (x.size() != input_dim()) throw SchemaError("MLP input dimension mismatch");
  if (grad.size() != params_.size()) throw SchemaError("gradient buffer size mismatch");
  Workspace ws;
  return backprop(widths_, params_, x, target, grad, ws);
}

std::vector<double> Mlp::fit(std::span<const double> inputs, std::span<const double> targets,
                             const TrainConfig& config) {
  config.validate();
  const std::size_t d = input_dim();
  const std::size_t n = targets.size();
  if (n == 0 || inputs.size() != n * d) throw SchemaError("training inputs do not match targets x input_dim");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.shuffle_seed);
  Workspace ws;

  const std::size_t np = params_.size();
  std::vector<double> grad(np), m(np, 0.0), v(np, 0.0);
  std::vector<double> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  double beta1_pow = 1.0;
  double beta2_pow = 1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t row = order[k];
        loss_sum += backprop(widths_, params_, inputs.subspan(row * d, d), targets[row], grad, ws);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      beta1_pow *= config.beta1;
      beta2_pow *= config.beta2;
      const double step = config.learning_rate * std::sqrt(1.0 - beta2_pow) / (1.0 - beta1_pow);
      for (std::size_t i = 0; i < np; ++i) {
        const double g = grad[i] * scale;
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        params_[i] -= step * m[i] / (std::sqrt(v[i]) + config.epsilon);
      }
    }
    history.push_back(loss_sum / static_cast<double>(n));
  }
  return history;
}

double gradient_check(const Mlp& mlp, std::span<const double> x, double target, double h) {
  std::vector<double> analytic(mlp.parameters().size(), 0.0);
  mlp.accumulate_gradient(x, target, analytic);
  Mlp probe = mlp;
  auto params = probe.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = probe.forward(x) - target;
    params[i] = saved - h;
    const double down = probe.forward(x) - target;
    params[i] = saved;
    const double numeric = (up * up - down * down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Pipeline

double compress_feature(double v) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("raw features must be finite and >= 0");
  return std::log1p(v);
}

std::vector<double> PerfModel::encode_workload(const FeatureVector& raw) const {
  if (feature_scaler.names != kept_features ||
      static_cast<std::size_t>(pca.means.size()) != kept_features.size()) {
    throw SchemaError("model feature schema is inconsistent");
  }
  Eigen::VectorXd row(static_cast<Eigen::Index>(kept_features.size()));
  for (std::size_t j = 0; j < kept_features.size(); ++j) {
    const auto it = std::find(kRawFeatureNames.begin(), kRawFeatureNames.end(), kept_features[j]);
    if (it == kRawFeatureNames.end()) throw SchemaError("unknown model feature '" + kept_features[j] + "'");
    const auto raw_index = static_cast<std::size_t>(it - kRawFeatureNames.begin());
    row(static_cast<Eigen::Index>(j)) = feature_scaler.apply(j, compress_feature(raw.values[raw_index]));
  }
  const Eigen::VectorXd z = pca_transform(pca, row);
  return {z.data(), z.data() + z.size()};
}

void PerfModel::encode(std::span<const double> workload, StreamConfig config, std::span<double> input) const {
  if (workload.size() != pca.size() || input.size() != workload.size() + 2) {
    throw SchemaError("model input dimension mismatch");
  }
  std::copy(workload.begin(), workload.end(), input.begin());
  input[workload.size()] = config_scaler.apply(0, std::log2(static_cast<double>(config.partitions())));
  input[workload.size() + 1] = config_scaler.apply(1, std::log2(static_cast<double>(config.tasks())));
}

double PerfModel::predict_normalized(std::span<const double> workload, StreamConfig config) const {
  double input[kMaxWidth];
  if (workload.size() + 2 > kMaxWidth) throw SchemaError("model input too wide");
  const std::span<double> in(input, workload.size() + 2);
  encode(workload, config, in);
  return mlp.forward(in);
}

double PerfModel::predict_speedup(std::span<const double> workload, StreamConfig config) const {
  return std::max(std::exp(target_scaler.invert(0, predict_normalized(workload, config))), kSpeedupFloor);
}

double PerfModel::predict_speedup(const FeatureVector& raw, StreamConfig config) const {
  return predict_speedup(encode_workload(raw), config);
}

namespace {

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
}

template <typename T>
void fnv_value(std::uint64_t& h, T v) {
  fnv_bytes(h, &v, sizeof v);
}

}  // namespace

std::uint64_t hash_samples(std::span<const Sample> samples) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& s : samples) {
    fnv_bytes(h, s.workload_id.data(), s.workload_id.size());
    for (double v : s.features.values) fnv_value(h, std::bit_cast<std::uint64_t>(v));
    fnv_value(h, s.config.partitions());
    fnv_value(h, s.config.tasks());
    fnv_value(h, std::bit_cast<std::uint64_t>(s.speedup));
  }
  return h;
}

TrainResult train(std::span<const Sample> samples, const MlpSpec& mlp_spec, const TrainConfig& config) {
  config.validate();
  const std::size_t n = samples.size();
  if (n < 2) throw InsufficientDataError("training needs at least 2 samples");

  FeatureMatrix raw;
  raw.names.assign(kRawFeatureNames.begin(), kRawFeatureNames.end());
  raw.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kRawFeatureCount));
  Eigen::MatrixXd configs(static_cast<Eigen::Index>(n), 2);
  Eigen::MatrixXd speedups(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < kRawFeatureCount; ++j) {
      raw.values(r, static_cast<Eigen::Index>(j)) = compress_feature(samples[i].features.values[j]);
    }
    configs(r, 0) = std::log2(static_cast<double>(samples[i].config.partitions()));
    configs(r, 1) = std::log2(static_cast<double>(samples[i].config.tasks()));
    if (!(samples[i].speedup > 0.0) || !std::isfinite(samples[i].speedup)) {
      throw DomainError("sample speedups must be positive and finite");
    }
    speedups(r, 0) = std::log(samples[i].speedup);
  }

  PerfModel model;
  // With no informative feature left the model sees the configuration only.
  model.kept_features = select_features(raw);
  const FeatureMatrix kept = raw.select(model.kept_features);
  FeatureMatrix standardized = kept;
  if (model.kept_features.empty()) {
    model.pca.components.resize(0, 0);
    model.pca.means.resize(0);
    model.pca.explained_variance.resize(0);
    model.pca.spectrum.resize(0);
  } else {
    model.feature_scaler = fit_scaler(kept, ScalerKind::kZScore);
    standardized = apply_scaler(model.feature_scaler, kept);
    model.pca = pca_fit(standardized.values);
  }

  const std::size_t k = model.pca.size();
  const std::size_t input_dim = k + 2;
  if (mlp_spec.input_dim != 0 && mlp_spec.input_dim != input_dim) {
    throw SchemaError("MLP spec input_dim " + std::to_string(mlp_spec.input_dim) + " does not match the " +
                      std::to_string(input_dim) + " engineered inputs");
  }
  if (n < 10 * input_dim) {
    throw InsufficientDataError("training needs at least 10 samples per model input (" +
                                std::to_string(10 * input_dim) + "), got " + std::to_string(n));
  }

  model.config_scaler = fit_scaler(FeatureMatrix{{"log2_partitions", "log2_tasks"}, configs}, ScalerKind::kZScore);
  model.target_scaler = fit_scaler(FeatureMatrix{{"log_speedup"}, speedups}, ScalerKind::kMinMax);
  if (k > 0) model.importance = varimax(model.pca.loadings()).importance;

  std::vector<double> inputs(n * input_dim);
  std::vector<double> targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd z = pca_transform(model.pca, standardized.values.row(static_cast<Eigen::Index>(i)).transpose());
    const std::span<double> in(inputs.data() + i * input_dim, input_dim);
    model.encode({z.data(), k}, samples[i].config, in);
    targets[i] = model.target_scaler.apply(0, speedups(static_cast<Eigen::Index>(i), 0));
  }

  MlpSpec spec = mlp_spec;
  spec.input_dim = input_dim;
  model.mlp = Mlp(spec);
  TrainResult result;
  result.loss_history = model.mlp.fit(inputs, targets, config);
  model.metadata = {hash_samples(samples), spec.init_seed, config.shuffle_seed, n};
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Binary format: "PMDL", u32 version, dimension table, little-endian payload,
// trailing CRC32 over every preceding byte.

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'M', 'D', 'L'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t n) {
    need(n * 8);
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("corrupt model file: truncated payload");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

std::span<const double> as_span(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

constexpr std::uint32_t kMaxDim = 1u << 16;

std::uint32_t checked_dim(std::uint32_t v) {
  if (v > kMaxDim) throw FormatError("corrupt model file: implausible dimension");
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const PerfModel& m) {
  const std::size_t d = m.kept_features.size();
  const std::size_t k = m.pca.size();
  ByteWriter w;
  w.raw(kMagic);
  w.u32(kModelFormatVersion);

  // Dimension table.
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(k));
  w.u32(static_cast<std::uint32_t>(m.pca.requested_components));
  w.u32(static_cast<std::uint32_t>(m.mlp.widths().size()));
  for (auto width : m.mlp.widths()) w.u32(static_cast<std::uint32_t>(width));

  for (const auto& name : m.kept_features) w.str(name);
  w.u64(m.metadata.corpus_hash);
  w.u64(m.metadata.init_seed);
  w.u64(m.metadata.shuffle_seed);
  w.u64(m.metadata.sample_count);

  w.f64s(m.feature_scaler.first);
  w.f64s(m.feature_scaler.second);
  w.f64s(as_span(m.pca.means));
  for (Eigen::Index i = 0; i < m.pca.components.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.pca.components.cols(); ++j) w.f64(m.pca.components(i, j));
  }
  w.f64s(as_span(m.pca.explained_variance));
  w.f64s(as_span(m.pca.spectrum));
  w.f64s(m.config_scaler.first);
  w.f64s(m.config_scaler.second);
  w.f64s(m.target_scaler.first);
  w.f64s(m.target_scaler.second);
  w.f64s(as_span(m.importance));
  w.f64s(m.mlp.parameters());

  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

PerfModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("corrupt model file: bad magic bytes");
  }
  ByteReader header(bytes.subspan(4, 4));
  const std::uint32_t version = header.u32();
  if (version != kModelFormatVersion) {
    throw VersionError("model file format version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kModelFormatVersion) + ")");
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (tail.u32() != crc32_of(body)) throw FormatError("corrupt model file: checksum mismatch");

  ByteReader r(body.subspan(8));
  const std::uint32_t d = checked_dim(r.u32());
  const std::uint32_t k = checked_dim(r.u32());
  const std::uint32_t requested = checked_dim(r.u32());
  const std::uint32_t n_widths = checked_dim(r.u32());
  std::vector<std::size_t> widths;
  for (std::uint32_t i = 0; i < n_widths; ++i) widths.push_back(checked_dim(r.u32()));

  PerfModel m;
  for (std::uint32_t i = 0; i < d; ++i) m.kept_features.push_back(r.str());
  m.metadata.corpus_hash = r.u64();
  m.metadata.init_seed = r.u64();
  m.metadata.shuffle_seed = r.u64();
  m.metadata.sample_count = r.u64();

  m.feature_scaler.kind = ScalerKind::kZScore;
  m.feature_scaler.names = m.kept_features;
  m.feature_scaler.first = r.f64s(d);
  m.feature_scaler.second = r.f64s(d);
  m.pca.requested_components = requested;
  m.pca.means = to_vector(r.f64s(d));
  m.pca.components.resize(k, d);
  for (std::uint32_t i = 0; i < k; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) m.pca.components(i, j) = r.f64();
  }
  m.pca.explained_variance = to_vector(r.f64s(k));
  m.pca.spectrum = to_vector(r.f64s(d));
  m.config_scaler = {ScalerKind::kZScore, {"log2_partitions", "log2_tasks"}, r.f64s(2), r.f64s(2)};
  m.target_scaler = {ScalerKind::kMinMax, {"log_speedup"}, r.f64s(1), r.f64s(1)};
  m.importance = to_vector(r.f64s(d));

  std::size_t n_params = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) n_params += widths[l] * widths[l - 1] + widths[l];
  if (widths.empty() || widths.front() != k + 2) throw FormatError("corrupt model file: input width mismatch");
  m.mlp = Mlp::from_parts(widths, r.f64s(n_params));
  if (!r.done()) throw FormatError("corrupt model file: trailing bytes");
  return m;
}

void save_model(const PerfModel& model, const std::string& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing model file '" + path + "'");
}

PerfModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace streamtune
