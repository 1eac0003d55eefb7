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

#ifndef ACCL_CONTINUAL_HPP_
#define ACCL_CONTINUAL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accl/model.hpp"
#include "accl/rng.hpp"
#include "accl/scenario.hpp"

namespace accl {

enum class CLMethod { kPlain, kER, kGSS, kDERpp, kERACE };

std::string cl_method_name(CLMethod m);
CLMethod cl_method_from_name(const std::string& name);  // throws ConfigError

struct CLMethodConfig {
  CLMethod method = CLMethod::kER;
  double alpha = 0.1;               // DER++ MSE weight
  double beta = 0.5;                // DER++ replay-CE weight
  std::size_t gss_candidates = 5;   // samples for the max-cosine score
  std::size_t replay_batch_size = 0;  // 0 = use the training batch size

  void validate() const;
};

struct BufferEntry {
  Example example;
  int label = -1;
  std::vector<double> logits;    // cached at insertion (DER++ only)
  std::vector<double> gss_grad;  // flattened head gradient at insertion (GSS only)
  double gss_score = 0.0;
};

// Bounded rehearsal store. Single-writer; reads may happen between updates.
class MemoryBuffer {
 public:
  MemoryBuffer() = default;
  MemoryBuffer(std::size_t capacity, bool store_logits, std::uint64_t seed);

  std::size_t capacity() const { return capacity_; }
  bool stores_logits() const { return store_logits_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<BufferEntry>& entries() const { return entries_; }
  std::uint64_t stream_count() const { return stream_count_; }

  // Uniform draw of `n` entry indices with replacement.
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  std::string to_json() const;
  static MemoryBuffer from_json(const std::string& text);

 private:
  friend void buffer_update_reservoir(MemoryBuffer&, const LabeledSet&, const ModelState*);
  friend void buffer_update_gss(MemoryBuffer&, const LabeledSet&, const ModelState&,
                                std::size_t);
  std::size_t capacity_ = 0;
  bool store_logits_ = false;
  std::vector<BufferEntry> entries_;
  std::uint64_t stream_count_ = 0;  // lifetime insertions seen (reservoir n)
  Rng rng_{0};
  std::uint64_t seed_ = 0;
};

// Classic reservoir sampling over the lifetime stream of labeled examples.
// When the buffer stores logits, `model` must be non-null so the current
// logits can be cached at insertion.
void buffer_update_reservoir(MemoryBuffer& buffer, const LabeledSet& labeled,
                             const ModelState* model = nullptr);

// GSS-greedy: score each arrival by max cosine similarity of its head
// gradient against `gss_candidates` sampled buffer entries (score = c + 1);
// full buffers replace a score-weighted victim with probability
// s_victim / (s_victim + s_new). Zero gradients are treated as cosine 0.
void buffer_update_gss(MemoryBuffer& buffer, const LabeledSet& labeled,
                       const ModelState& model, std::size_t gss_candidates);

struct LossResult {
  double loss = 0.0;
  Gradients grads;
};

// Cross-entropy on a batch (mean reduction).
LossResult loss_plain(const ModelState& model, std::span<const LabeledExample> batch);

// Cross-entropy over the union of the new batch and a replayed memory batch.
LossResult loss_er(const ModelState& model, std::span<const LabeledExample> batch_new,
                   std::span<const LabeledExample> batch_mem);

// CE(new) + alpha * MSE(current logits on mem_a, stored logits)
//         + beta * CE(mem_b labels).
LossResult loss_derpp(const ModelState& model, std::span<const LabeledExample> batch_new,
                      std::span<const BufferEntry> batch_mem_a,
                      std::span<const LabeledExample> batch_mem_b, double alpha, double beta);

// Asymmetric CE: the new batch uses a softmax restricted to
// `classes_in_batch` (other logits are excluded and receive no gradient);
// the memory batch uses a softmax over `classes_seen`.
LossResult loss_erace(const ModelState& model, std::span<const LabeledExample> batch_new,
                      std::span<const LabeledExample> batch_mem,
                      const std::vector<int>& classes_in_batch,
                      const std::vector<int>& classes_seen);

}  // namespace accl

#endif  // ACCL_CONTINUAL_HPP_
