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

#ifndef ACCL_MODEL_HPP_
#define ACCL_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace accl {

// One affine layer, weights stored row-major as [out x in].
struct LayerParams {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out * in
  std::vector<double> bias;     // out

  double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
  double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }
};

// MLP feature extractor (ReLU after every extractor layer) plus a K x d
// linear classification head. The head always covers all scenario classes;
// rows of classes not yet seen are simply trained whenever their labels
// appear. An empty extractor means the embedding is the raw feature vector.
struct ModelState {
  std::vector<LayerParams> extractor;
  LayerParams head;  // K x d
  std::uint64_t rng_seed = 0;

  std::size_t input_dim() const {
    return extractor.empty() ? head.in : extractor.front().in;
  }
  std::size_t embedding_dim() const { return head.in; }
  std::size_t num_classes() const { return head.out; }
  bool finite() const;
  // FNV-1a over the raw parameter bytes; used to assert snapshot identity.
  std::uint64_t param_hash() const;
};

enum class LrSchedule { kConstant, kCosineAnnealing };

struct OptimizerConfig {
  double learning_rate = 0.05;
  double momentum = 0.8;
  double weight_decay = 1e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  LrSchedule schedule = LrSchedule::kCosineAnnealing;

  void validate() const;  // throws ConfigError
};

struct ForwardResult {
  std::vector<double> embedding;  // h, length d
  std::vector<double> logits;     // z, length K
  std::vector<double> probs;      // softmax(z), length K
};

// Weight init is uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from `seed`.
ModelState make_model(std::size_t input_dim, const std::vector<std::size_t>& hidden_widths,
                      std::size_t num_classes, std::uint64_t seed);

// Deterministic inference pass. Throws ShapeError on input width mismatch.
ForwardResult forward(const ModelState& model, std::span<const double> x);

// Gradient of log p(c | x) with respect to the head weights, returned as a
// K x d row-major matrix: G[k][i] = (1[k == c] - p_k) * h_i. Class index is
// 0-based; out of range throws IndexError.
std::vector<double> last_layer_gradient(const ForwardResult& fr, std::size_t c);

// Gradient of log p(c | x) with respect to the head bias: (1[k == c] - p_k).
std::vector<double> last_layer_bias_gradient(const ForwardResult& fr, std::size_t c);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> z);

// Parameter-shaped accumulator used by the loss functions and the trainer.
struct Gradients {
  std::vector<LayerParams> extractor;
  LayerParams head;

  static Gradients zeros_like(const ModelState& m);
  void scale(double s);
  void add_scaled(const Gradients& other, double s);
};

namespace detail {
// Full forward pass retaining pre-activations, for backprop.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;   // per extractor layer, pre-ReLU
  std::vector<std::vector<double>> post;  // per extractor layer, post-ReLU
  ForwardResult result;
};
ForwardTrace forward_trace(const ModelState& model, std::span<const double> x);

// Backpropagates dL/dz (gradient at the logits) through head and extractor,
// accumulating `weight * grad` into `grads`.
void backward_from_logits(const ModelState& model, std::span<const double> x,
                          const ForwardTrace& trace, std::span<const double> dloss_dz,
                          double weight, Gradients& grads);
}  // namespace detail

}  // namespace accl

#endif  // ACCL_MODEL_HPP_
