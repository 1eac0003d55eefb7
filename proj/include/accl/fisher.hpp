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

#ifndef ACCL_FISHER_HPP_
#define ACCL_FISHER_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "accl/continual.hpp"
#include "accl/model.hpp"
#include "accl/scenario.hpp"

namespace accl {

// Diagonal Fisher information over the head weights, laid out row-major as
// K x d: entry (k, i) = p_k * (1 - p_k) * h_i^2. The head bias is excluded.
struct FisherEmbedding {
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  std::vector<double> values;  // num_classes * dim, all nonnegative

  double at(std::size_t k, std::size_t i) const { return values[k * dim + i]; }
  double& at(std::size_t k, std::size_t i) { return values[k * dim + i]; }
};

// lambda-weighted combination of the memory-buffer Fisher (past) and the
// unlabeled-pool Fisher (new), with lambda = past / (past + new) pool sizes.
struct TargetFisher {
  FisherEmbedding values;
  double lambda = 0.0;
  std::uint64_t past_pool_size = 0;
  std::uint64_t new_pool_size = 0;
};

// Per-class indices of the dimensions with the highest target Fisher mass.
struct DimSelection {
  std::vector<std::vector<std::size_t>> per_class;  // each of length m, indices < d
  std::size_t dims_per_class = 0;
};

// Closed form from a single forward pass; no gradient evaluations.
FisherEmbedding fisher_embedding(const ForwardResult& fr);

// Diagonal Fisher assembled from K explicit head-gradient evaluations:
// sum_y p(y|x) * grad_y^2. The independent route against fisher_embedding;
// also the building block for BAIT's full matrices.
FisherEmbedding fisher_oracle(const ModelState& model, const Example& x);

// Arithmetic mean of per-example embeddings. Empty input throws.
FisherEmbedding dataset_fisher(const ModelState& model, std::span<const Example> examples);
FisherEmbedding dataset_fisher(const ModelState& model, const MemoryBuffer& memory);

// F_t = lambda * F(memory) + (1 - lambda) * F(pool). At task 1
// (past_pool_size = 0) the memory is not consulted.
TargetFisher target_fisher(const ModelState& model, const MemoryBuffer& memory,
                           std::span<const Example> pool, std::uint64_t past_pool_size,
                           std::uint64_t new_pool_size);

// l2 norm of the embedding.
double magnitude_score(const FisherEmbedding& f);

// Per class, the indices of the m largest target entries (ties toward the
// lower index). m > d throws ConfigError.
DimSelection select_dims(const TargetFisher& target, std::size_t m);

// exp(-D_JS(softmax(f restricted) || softmax(target restricted))), natural
// log, both sides restricted to the same selected (class, dim) entries and
// flattened before the softmax. Always in [exp(-ln 2), 1] = [0.5, 1].
// js_log_scale multiplies D_JS before the exp; any positive value leaves
// score rankings unchanged.
double distribution_score(const FisherEmbedding& f, const TargetFisher& target,
                          const DimSelection& dims, double js_log_scale = 1.0);

// Debug dump: one row per example, `id` followed by the K*d embedding values.
void write_embeddings_csv(const std::string& path, const ModelState& model,
                          std::span<const Example> examples);

}  // namespace accl

#endif  // ACCL_FISHER_HPP_
