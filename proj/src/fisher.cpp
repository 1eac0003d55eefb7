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

#include "accl/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "accl/errors.hpp"

namespace accl {

FisherEmbedding fisher_embedding(const ForwardResult& fr) {
  FisherEmbedding f;
  f.num_classes = fr.probs.size();
  f.dim = fr.embedding.size();
  f.values.resize(f.num_classes * f.dim);
  for (std::size_t k = 0; k < f.num_classes; ++k) {
    const double pk = fr.probs[k];
    const double coef = pk * (1.0 - pk);
    for (std::size_t i = 0; i < f.dim; ++i) {
      const double h = fr.embedding[i];
      f.values[k * f.dim + i] = coef * h * h;
    }
  }
  return f;
}

FisherEmbedding fisher_oracle(const ModelState& model, const Example& x) {
  const ForwardResult fr = forward(model, x.features);
  const std::size_t num_classes = model.num_classes();
  const std::size_t d = model.embedding_dim();
  FisherEmbedding f;
  f.num_classes = num_classes;
  f.dim = d;
  f.values.assign(num_classes * d, 0.0);
  for (std::size_t y = 0; y < num_classes; ++y) {
    const auto g = last_layer_gradient(fr, y);
    const double py = fr.probs[y];
    for (std::size_t j = 0; j < g.size(); ++j) f.values[j] += py * g[j] * g[j];
  }
  return f;
}

namespace {

FisherEmbedding mean_embedding(const ModelState& model,
                               const std::vector<const Example*>& examples) {
  if (examples.empty()) throw PreconditionError("dataset_fisher: empty example set");
  FisherEmbedding acc;
  acc.num_classes = model.num_classes();
  acc.dim = model.embedding_dim();
  acc.values.assign(acc.num_classes * acc.dim, 0.0);
  for (const Example* e : examples) {
    const auto f = fisher_embedding(forward(model, e->features));
    for (std::size_t j = 0; j < f.values.size(); ++j) acc.values[j] += f.values[j];
  }
  const double inv = 1.0 / static_cast<double>(examples.size());
  for (double& v : acc.values) v *= inv;
  return acc;
}

}  // namespace

FisherEmbedding dataset_fisher(const ModelState& model, std::span<const Example> examples) {
  std::vector<const Example*> ptrs;
  ptrs.reserve(examples.size());
  for (const Example& e : examples) ptrs.push_back(&e);
  return mean_embedding(model, ptrs);
}

FisherEmbedding dataset_fisher(const ModelState& model, const MemoryBuffer& memory) {
  std::vector<const Example*> ptrs;
  ptrs.reserve(memory.size());
  for (const BufferEntry& e : memory.entries()) ptrs.push_back(&e.example);
  return mean_embedding(model, ptrs);
}

TargetFisher target_fisher(const ModelState& model, const MemoryBuffer& memory,
                           std::span<const Example> pool, std::uint64_t past_pool_size,
                           std::uint64_t new_pool_size) {
  if (new_pool_size == 0) throw PreconditionError("target_fisher: new_pool_size must be > 0");
  if (pool.empty()) throw PreconditionError("target_fisher: empty pool");
  TargetFisher t;
  t.past_pool_size = past_pool_size;
  t.new_pool_size = new_pool_size;
  t.lambda = static_cast<double>(past_pool_size) /
             static_cast<double>(past_pool_size + new_pool_size);
  t.values = dataset_fisher(model, pool);
  if (past_pool_size == 0) return t;  // task 1: memory not consulted

  if (memory.empty())
    throw StateError("target_fisher: past pools exist but the memory buffer is empty");
  const FisherEmbedding mem = dataset_fisher(model, memory);
  for (std::size_t j = 0; j < t.values.values.size(); ++j) {
    t.values.values[j] = t.lambda * mem.values[j] + (1.0 - t.lambda) * t.values.values[j];
  }
  return t;
}

double magnitude_score(const FisherEmbedding& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s);
}

DimSelection select_dims(const TargetFisher& target, std::size_t m) {
  const std::size_t d = target.values.dim;
  if (m == 0 || m > d)
    throw ConfigError("select_dims: m = " + std::to_string(m) + " must be in [1, d = " +
                      std::to_string(d) + "]");
  DimSelection sel;
  sel.dims_per_class = m;
  sel.per_class.resize(target.values.num_classes);
  std::vector<std::size_t> order(d);
  for (std::size_t k = 0; k < target.values.num_classes; ++k) {
    std::iota(order.begin(), order.end(), 0);
    const double* row = &target.values.values[k * d];
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] > row[b]; });
    sel.per_class[k].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  }
  return sel;
}

namespace {

std::vector<double> restrict_and_softmax(const FisherEmbedding& f, const DimSelection& dims) {
  std::vector<double> r;
  r.reserve(f.num_classes * dims.dims_per_class);
  for (std::size_t k = 0; k < f.num_classes; ++k) {
    for (std::size_t i : dims.per_class[k]) r.push_back(f.at(k, i));
  }
  return softmax(r);
}

}  // namespace

double distribution_score(const FisherEmbedding& f, const TargetFisher& target,
                          const DimSelection& dims, double js_log_scale) {
  const auto p = restrict_and_softmax(f, dims);
  const auto q = restrict_and_softmax(target.values, dims);
  double js = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double m = 0.5 * (p[j] + q[j]);
    js += 0.5 * p[j] * std::log(p[j] / m) + 0.5 * q[j] * std::log(q[j] / m);
  }
  js = std::max(js, 0.0);  // clamp fp round-off at identity
  return std::exp(-js_log_scale * js);
}

void write_embeddings_csv(const std::string& path, const ModelState& model,
                          std::span<const Example> examples) {
  std::ofstream out(path);
  if (!out) throw FormatError(path + ": cannot open for writing");
  for (const Example& e : examples) {
    const auto f = fisher_embedding(forward(model, e.features));
    out << e.id;
    char buf[32];
    for (double v : f.values) {
      std::snprintf(buf, sizeof(buf), ",%.17g", v);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace accl
