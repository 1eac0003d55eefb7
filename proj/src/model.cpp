// Copyright 2025 The acclab Authors
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

#include "accl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "accl/errors.hpp"
#include "accl/rng.hpp"

namespace accl {

namespace {

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_layer(std::uint64_t h, const LayerParams& l) {
  h = fnv1a_bytes(h, l.weights.data(), l.weights.size() * sizeof(double));
  h = fnv1a_bytes(h, l.bias.data(), l.bias.size() * sizeof(double));
  return h;
}

LayerParams zero_layer(std::size_t in, std::size_t out) {
  LayerParams l;
  l.in = in;
  l.out = out;
  l.weights.assign(in * out, 0.0);
  l.bias.assign(out, 0.0);
  return l;
}

void init_layer(LayerParams& l, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(l.in));
  for (double& w : l.weights) w = rng.uniform(-bound, bound);
  for (double& b : l.bias) b = rng.uniform(-bound, bound);
}

// y = W x + b
void affine(const LayerParams& l, std::span<const double> x, std::vector<double>& y) {
  y.assign(l.out, 0.0);
  for (std::size_t r = 0; r < l.out; ++r) {
    double acc = l.bias[r];
    const double* wr = &l.weights[r * l.in];
    for (std::size_t c = 0; c < l.in; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace

bool ModelState::finite() const {
  for (const auto& l : extractor) {
    if (!all_finite(l.weights) || !all_finite(l.bias)) return false;
  }
  return all_finite(head.weights) && all_finite(head.bias);
}

std::uint64_t ModelState::param_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : extractor) h = hash_layer(h, l);
  return hash_layer(h, head);
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("optimizer: learning_rate must be a positive finite value");
  if (momentum < 0.0 || momentum >= 1.0 || !std::isfinite(momentum))
    throw ConfigError("optimizer: momentum must be in [0, 1)");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay))
    throw ConfigError("optimizer: weight_decay must be nonnegative");
  if (batch_size < 1) throw ConfigError("optimizer: batch_size must be >= 1");
}

ModelState make_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                      std::size_t num_classes, std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("model: input_dim must be positive");
  if (num_classes < 2) throw ConfigError("model: need at least 2 classes");
  for (std::size_t w : hidden_widths) {
    if (w == 0) throw ConfigError("model: hidden width must be positive");
  }
  ModelState m;
  m.rng_seed = seed;
  Rng rng(Rng::mix(seed, 0x6d6f64656cULL));
  std::size_t in = input_dim;
  for (std::size_t w : hidden_widths) {
    LayerParams l = zero_layer(in, w);
    init_layer(l, rng);
    m.extractor.push_back(std::move(l));
    in = w;
  }
  m.head = zero_layer(in, num_classes);
  init_layer(m.head, rng);
  return m;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  double zmax = -INFINITY;
  for (double v : z) zmax = std::max(zmax, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    p[k] = std::exp(z[k] - zmax);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

namespace detail {

ForwardTrace forward_trace(const ModelState& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("forward: input width " + std::to_string(x.size()) +
                     " does not match model input dim " + std::to_string(model.input_dim()));
  }
  ForwardTrace t;
  std::vector<double> cur(x.begin(), x.end());
  for (const auto& layer : model.extractor) {
    std::vector<double> z;
    affine(layer, cur, z);
    t.pre.push_back(z);
    for (double& v : z) v = std::max(0.0, v);
    t.post.push_back(z);
    cur = std::move(z);
  }
  t.result.embedding = cur;
  affine(model.head, cur, t.result.logits);
  t.result.probs = softmax(t.result.logits);
  return t;
}

void backward_from_logits(const ModelState& model, std::span<const double> x,
                          const ForwardTrace& trace, std::span<const double> dloss_dz,
                          double weight, Gradients& grads) {
  const std::size_t d = model.embedding_dim();
  const std::size_t num_classes = model.num_classes();
  const auto& h = trace.result.embedding;

  // Head.
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double g = dloss_dz[k];
    if (g == 0.0) continue;
    double* row = &grads.head.weights[k * d];
    for (std::size_t i = 0; i < d; ++i) row[i] += weight * g * h[i];
    grads.head.bias[k] += weight * g;
  }

  // Extractor, back to front.
  std::vector<double> delta(d, 0.0);  // dL/dh
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double g = dloss_dz[k];
    if (g == 0.0) continue;
    const double* wr = &model.head.weights[k * d];
    for (std::size_t i = 0; i < d; ++i) delta[i] += g * wr[i];
  }
  for (std::size_t li = model.extractor.size(); li-- > 0;) {
    const auto& layer = model.extractor[li];
    auto& glayer = grads.extractor[li];
    // ReLU gate.
    for (std::size_t r = 0; r < layer.out; ++r) {
      if (trace.pre[li][r] <= 0.0) delta[r] = 0.0;
    }
    std::span<const double> input =
        (li == 0) ? x : std::span<const double>(trace.post[li - 1]);
    std::vector<double> next_delta(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double g = delta[r];
      glayer.bias[r] += weight * g;
      if (g == 0.0) continue;
      double* grow = &glayer.weights[r * layer.in];
      const double* wrow = &layer.weights[r * layer.in];
      for (std::size_t c = 0; c < layer.in; ++c) {
        grow[c] += weight * g * input[c];
        next_delta[c] += g * wrow[c];
      }
    }
    delta = std::move(next_delta);
  }
}

}  // namespace detail

ForwardResult forward(const ModelState& model, std::span<const double> x) {
  return detail::forward_trace(model, x).result;
}

std::vector<double> last_layer_gradient(const ForwardResult& fr, std::size_t c) {
  const std::size_t num_classes = fr.probs.size();
  const std::size_t d = fr.embedding.size();
  if (c >= num_classes) {
    throw IndexError("last_layer_gradient: class index " + std::to_string(c) +
                     " out of range [0, " + std::to_string(num_classes) + ")");
  }
  std::vector<double> g(num_classes * d);
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double coef = (k == c ? 1.0 : 0.0) - fr.probs[k];
    for (std::size_t i = 0; i < d; ++i) g[k * d + i] = coef * fr.embedding[i];
  }
  return g;
}

std::vector<double> last_layer_bias_gradient(const ForwardResult& fr, std::size_t c) {
  const std::size_t num_classes = fr.probs.size();
  if (c >= num_classes) {
    throw IndexError("last_layer_bias_gradient: class index out of range");
  }
  std::vector<double> g(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) g[k] = (k == c ? 1.0 : 0.0) - fr.probs[k];
  return g;
}

Gradients Gradients::zeros_like(const ModelState& m) {
  Gradients g;
  for (const auto& l : m.extractor) g.extractor.push_back(zero_layer(l.in, l.out));
  g.head = zero_layer(m.head.in, m.head.out);
  return g;
}

void Gradients::scale(double s) {
  for (auto& l : extractor) {
    for (double& w : l.weights) w *= s;
    for (double& b : l.bias) b *= s;
  }
  for (double& w : head.weights) w *= s;
  for (double& b : head.bias) b *= s;
}

void Gradients::add_scaled(const Gradients& other, double s) {
  for (std::size_t li = 0; li < extractor.size(); ++li) {
    auto& l = extractor[li];
    const auto& o = other.extractor[li];
    for (std::size_t i = 0; i < l.weights.size(); ++i) l.weights[i] += s * o.weights[i];
    for (std::size_t i = 0; i < l.bias.size(); ++i) l.bias[i] += s * o.bias[i];
  }
  for (std::size_t i = 0; i < head.weights.size(); ++i) head.weights[i] += s * other.head.weights[i];
  for (std::size_t i = 0; i < head.bias.size(); ++i) head.bias[i] += s * other.head.bias[i];
}

}  // namespace accl
