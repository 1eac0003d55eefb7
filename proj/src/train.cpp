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

#include "accl/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "accl/errors.hpp"
#include "accl/rng.hpp"

namespace accl {

namespace {

double lr_at_epoch(const OptimizerConfig& opt, std::size_t epoch) {
  if (opt.schedule == LrSchedule::kConstant || opt.epochs <= 1) return opt.learning_rate;
  const double progress = static_cast<double>(epoch) / static_cast<double>(opt.epochs);
  return 0.5 * opt.learning_rate * (1.0 + std::cos(M_PI * progress));
}

void apply_weight_decay(const ModelState& model, double wd, Gradients& g) {
  if (wd == 0.0) return;
  for (std::size_t li = 0; li < model.extractor.size(); ++li) {
    const auto& l = model.extractor[li];
    auto& gl = g.extractor[li];
    for (std::size_t i = 0; i < l.weights.size(); ++i) gl.weights[i] += wd * l.weights[i];
    for (std::size_t i = 0; i < l.bias.size(); ++i) gl.bias[i] += wd * l.bias[i];
  }
  for (std::size_t i = 0; i < model.head.weights.size(); ++i)
    g.head.weights[i] += wd * model.head.weights[i];
  for (std::size_t i = 0; i < model.head.bias.size(); ++i)
    g.head.bias[i] += wd * model.head.bias[i];
}

void sgd_step(ModelState& model, Gradients& velocity, const Gradients& g, double lr,
              double momentum) {
  auto step_layer = [&](LayerParams& p, LayerParams& v, const LayerParams& gl) {
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      v.weights[i] = momentum * v.weights[i] + gl.weights[i];
      p.weights[i] -= lr * v.weights[i];
    }
    for (std::size_t i = 0; i < p.bias.size(); ++i) {
      v.bias[i] = momentum * v.bias[i] + gl.bias[i];
      p.bias[i] -= lr * v.bias[i];
    }
  };
  for (std::size_t li = 0; li < model.extractor.size(); ++li) {
    step_layer(model.extractor[li], velocity.extractor[li], g.extractor[li]);
  }
  step_layer(model.head, velocity.head, g.head);
}

std::vector<LabeledExample> replay_labeled(const MemoryBuffer& memory, std::size_t n, Rng& rng) {
  std::vector<LabeledExample> out;
  if (memory.empty() || n == 0) return out;
  out.reserve(n);
  for (std::size_t idx : memory.sample_indices(n, rng)) {
    const BufferEntry& e = memory.entries()[idx];
    out.push_back({e.example, e.label});
  }
  return out;
}

std::vector<BufferEntry> replay_entries(const MemoryBuffer& memory, std::size_t n, Rng& rng) {
  std::vector<BufferEntry> out;
  if (memory.empty() || n == 0) return out;
  out.reserve(n);
  for (std::size_t idx : memory.sample_indices(n, rng)) out.push_back(memory.entries()[idx]);
  return out;
}

std::vector<int> sorted_labels(std::span<const LabeledExample> xs) {
  std::set<int> s;
  for (const auto& le : xs) s.insert(le.label);
  return {s.begin(), s.end()};
}

}  // namespace

ModelState train(const ModelState& init, const LabeledSet& labeled, const MemoryBuffer& memory,
                 const CLMethodConfig& method, const OptimizerConfig& opt, std::uint64_t seed,
                 TrainStats* stats) {
  opt.validate();
  method.validate();
  if (labeled.empty()) throw PreconditionError("train: labeled set is empty");
  if (opt.epochs == 0) return init;

  ModelState model = init;
  Gradients velocity = Gradients::zeros_like(model);
  Rng rng(Rng::mix(seed, 0x747261696eULL));

  // classes_seen for ER-ACE: everything with a label visible to this call.
  std::set<int> seen;
  for (const auto& le : labeled.entries) seen.insert(le.label);
  for (const auto& e : memory.entries()) seen.insert(e.label);
  const std::vector<int> classes_seen(seen.begin(), seen.end());

  std::vector<std::size_t> order(labeled.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    const double lr = lr_at_epoch(opt, epoch);
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(start + opt.batch_size, order.size());
      std::vector<LabeledExample> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) batch.push_back(labeled.entries[order[i]]);

      const std::size_t replay_n =
          method.replay_batch_size > 0 ? method.replay_batch_size : batch.size();
      LossResult lr_result;
      switch (method.method) {
        case CLMethod::kPlain:
          lr_result = loss_plain(model, batch);
          break;
        case CLMethod::kER:
        case CLMethod::kGSS: {
          const auto mem_batch = replay_labeled(memory, replay_n, rng);
          lr_result = loss_er(model, batch, mem_batch);
          break;
        }
        case CLMethod::kDERpp: {
          const auto mem_a = replay_entries(memory, replay_n, rng);
          const auto mem_b = replay_labeled(memory, replay_n, rng);
          lr_result = loss_derpp(model, batch, mem_a, mem_b, method.alpha, method.beta);
          break;
        }
        case CLMethod::kERACE: {
          const auto mem_batch = replay_labeled(memory, replay_n, rng);
          lr_result = loss_erace(model, batch, mem_batch, sorted_labels(batch), classes_seen);
          break;
        }
      }
      if (!std::isfinite(lr_result.loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch) +
                              " batch " + std::to_string(batches));
      }
      apply_weight_decay(model, opt.weight_decay, lr_result.grads);
      sgd_step(model, velocity, lr_result.grads, lr, opt.momentum);
      epoch_loss += lr_result.loss;
      ++batches;
    }
    if (stats) stats->epoch_losses.push_back(epoch_loss / static_cast<double>(batches));
  }
  if (!model.finite()) throw DivergenceError("train: non-finite parameters after training");
  return model;
}

}  // namespace accl
