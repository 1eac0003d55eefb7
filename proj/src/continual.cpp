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

#include "accl/continual.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "accl/errors.hpp"

namespace accl {

std::string cl_method_name(CLMethod m) {
  switch (m) {
    case CLMethod::kPlain: return "plain";
    case CLMethod::kER: return "er";
    case CLMethod::kGSS: return "gss";
    case CLMethod::kDERpp: return "derpp";
    case CLMethod::kERACE: return "erace";
  }
  return "unknown";
}

CLMethod cl_method_from_name(const std::string& name) {
  if (name == "plain") return CLMethod::kPlain;
  if (name == "er") return CLMethod::kER;
  if (name == "gss") return CLMethod::kGSS;
  if (name == "derpp" || name == "der++") return CLMethod::kDERpp;
  if (name == "erace" || name == "er-ace") return CLMethod::kERACE;
  throw ConfigError("unknown CL method `" + name + "`");
}

void CLMethodConfig::validate() const {
  if (alpha < 0.0 || !std::isfinite(alpha)) throw ConfigError("cl: alpha must be >= 0");
  if (beta < 0.0 || !std::isfinite(beta)) throw ConfigError("cl: beta must be >= 0");
  if (gss_candidates < 1) throw ConfigError("cl: gss_candidates must be >= 1");
}

MemoryBuffer::MemoryBuffer(std::size_t capacity, bool store_logits, std::uint64_t seed)
    : capacity_(capacity), store_logits_(store_logits), rng_(Rng::mix(seed, 0x627566ULL)),
      seed_(seed) {
  if (capacity == 0) throw ConfigError("buffer: capacity must be positive");
}

std::vector<std::size_t> MemoryBuffer::sample_indices(std::size_t n, Rng& rng) const {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<std::size_t>(rng.below(entries_.size()));
  return idx;
}

void buffer_update_reservoir(MemoryBuffer& buffer, const LabeledSet& labeled,
                             const ModelState* model) {
  if (buffer.store_logits_ && model == nullptr)
    throw StateError("buffer: logit caching requested but no model provided");
  for (const LabeledExample& le : labeled.entries) {
    buffer.stream_count_ += 1;
    BufferEntry entry;
    entry.example = le.example;
    entry.label = le.label;
    if (buffer.store_logits_) {
      entry.logits = forward(*model, le.example.features).logits;
    }
    if (buffer.entries_.size() < buffer.capacity_) {
      buffer.entries_.push_back(std::move(entry));
    } else {
      const std::uint64_t j = buffer.rng_.below(buffer.stream_count_);
      if (j < buffer.capacity_) {
        buffer.entries_[static_cast<std::size_t>(j)] = std::move(entry);
      }
    }
  }
}

namespace {

double cosine_or_zero(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;  // zero-gradient rule
  return dot / std::sqrt(na * nb);
}

}  // namespace

void buffer_update_gss(MemoryBuffer& buffer, const LabeledSet& labeled,
                       const ModelState& model, std::size_t gss_candidates) {
  for (const LabeledExample& le : labeled.entries) {
    buffer.stream_count_ += 1;
    BufferEntry entry;
    entry.example = le.example;
    entry.label = le.label;
    const ForwardResult fr = forward(model, le.example.features);
    entry.gss_grad = last_layer_gradient(fr, static_cast<std::size_t>(le.label));

    double max_cos = 0.0;
    if (!buffer.entries_.empty()) {
      max_cos = -1.0;
      const std::size_t n = std::min(gss_candidates, buffer.entries_.size());
      auto idx = buffer.sample_indices(n, buffer.rng_);
      for (std::size_t i : idx) {
        max_cos = std::max(max_cos, cosine_or_zero(entry.gss_grad, buffer.entries_[i].gss_grad));
      }
    }
    entry.gss_score = max_cos + 1.0;

    if (buffer.entries_.size() < buffer.capacity_) {
      buffer.entries_.push_back(std::move(entry));
      continue;
    }
    // Score-weighted victim; high-score (redundant) entries go first.
    double total = 0.0;
    for (const auto& e : buffer.entries_) total += e.gss_score;
    std::size_t victim = buffer.entries_.size() - 1;
    if (total > 0.0) {
      double u = buffer.rng_.uniform() * total;
      for (std::size_t i = 0; i < buffer.entries_.size(); ++i) {
        u -= buffer.entries_[i].gss_score;
        if (u <= 0.0) {
          victim = i;
          break;
        }
      }
    } else {
      victim = static_cast<std::size_t>(buffer.rng_.below(buffer.entries_.size()));
    }
    const double s_victim = buffer.entries_[victim].gss_score;
    const double accept = s_victim / (s_victim + entry.gss_score);
    if (buffer.rng_.uniform() < accept) {
      buffer.entries_[victim] = std::move(entry);
    }
  }
}

namespace {

// CE over a class subset; empty subset means all classes. Returns the
// per-example loss and accumulates weight * dL/dparams.
double ce_example(const ModelState& model, const Example& x, int label,
                  const std::vector<int>& class_subset, double weight, Gradients& grads) {
  const auto trace = detail::forward_trace(model, x.features);
  const std::size_t num_classes = model.num_classes();
  std::vector<double> dz(num_classes, 0.0);
  double loss = 0.0;
  if (class_subset.empty()) {
    const auto& p = trace.result.probs;
    loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
    for (std::size_t k = 0; k < num_classes; ++k) {
      dz[k] = p[k] - (static_cast<int>(k) == label ? 1.0 : 0.0);
    }
  } else {
    std::vector<double> sub_logits(class_subset.size());
    for (std::size_t j = 0; j < class_subset.size(); ++j) {
      sub_logits[j] = trace.result.logits[static_cast<std::size_t>(class_subset[j])];
    }
    const auto q = softmax(sub_logits);
    double q_label = -1.0;
    for (std::size_t j = 0; j < class_subset.size(); ++j) {
      const int c = class_subset[j];
      dz[static_cast<std::size_t>(c)] = q[j] - (c == label ? 1.0 : 0.0);
      if (c == label) q_label = q[j];
    }
    if (q_label < 0.0)
      throw PreconditionError("loss: label " + std::to_string(label) +
                              " not in the restricted class set");
    loss = -std::log(std::max(q_label, 1e-300));
  }
  detail::backward_from_logits(model, x.features, trace, dz, weight, grads);
  return loss;
}

// Mean-reduced CE over a batch (optionally with a restricted softmax),
// scaled by `scale` in both the loss and the accumulated gradients.
double ce_batch(const ModelState& model, std::span<const LabeledExample> batch,
                const std::vector<int>& class_subset, double scale, Gradients& grads) {
  if (batch.empty()) return 0.0;
  const double w = scale / static_cast<double>(batch.size());
  double total = 0.0;
  for (const LabeledExample& le : batch) {
    total += ce_example(model, le.example, le.label, class_subset, w, grads);
  }
  return scale * total / static_cast<double>(batch.size());
}

const std::vector<int> kAllClasses;  // empty = unrestricted softmax

}  // namespace

LossResult loss_plain(const ModelState& model, std::span<const LabeledExample> batch) {
  if (batch.empty()) throw PreconditionError("loss: empty batch");
  LossResult r{0.0, Gradients::zeros_like(model)};
  r.loss = ce_batch(model, batch, kAllClasses, 1.0, r.grads);
  return r;
}

LossResult loss_er(const ModelState& model, std::span<const LabeledExample> batch_new,
                   std::span<const LabeledExample> batch_mem) {
  if (batch_new.empty()) throw PreconditionError("loss: empty batch");
  LossResult r{0.0, Gradients::zeros_like(model)};
  if (batch_mem.empty()) {
    r.loss = ce_batch(model, batch_new, kAllClasses, 1.0, r.grads);
    return r;
  }
  std::vector<LabeledExample> joint(batch_new.begin(), batch_new.end());
  joint.insert(joint.end(), batch_mem.begin(), batch_mem.end());
  r.loss = ce_batch(model, joint, kAllClasses, 1.0, r.grads);
  return r;
}

LossResult loss_derpp(const ModelState& model, std::span<const LabeledExample> batch_new,
                      std::span<const BufferEntry> batch_mem_a,
                      std::span<const LabeledExample> batch_mem_b, double alpha, double beta) {
  if (batch_new.empty()) throw PreconditionError("loss: empty batch");
  LossResult r{0.0, Gradients::zeros_like(model)};
  r.loss = ce_batch(model, batch_new, kAllClasses, 1.0, r.grads);

  if (alpha != 0.0 && !batch_mem_a.empty()) {
    const std::size_t num_classes = model.num_classes();
    const double w = alpha / static_cast<double>(batch_mem_a.size() * num_classes);
    double mse = 0.0;
    for (const BufferEntry& be : batch_mem_a) {
      if (be.logits.size() != num_classes)
        throw StateError("loss: buffer entry lacks cached logits for DER++");
      const auto trace = detail::forward_trace(model, be.example.features);
      std::vector<double> dz(num_classes);
      for (std::size_t k = 0; k < num_classes; ++k) {
        const double diff = trace.result.logits[k] - be.logits[k];
        mse += diff * diff;
        dz[k] = 2.0 * diff;
      }
      detail::backward_from_logits(model, be.example.features, trace, dz, w, r.grads);
    }
    r.loss += alpha * mse / static_cast<double>(batch_mem_a.size() * num_classes);
  }
  if (beta != 0.0 && !batch_mem_b.empty()) {
    r.loss += ce_batch(model, batch_mem_b, kAllClasses, beta, r.grads);
  }
  return r;
}

LossResult loss_erace(const ModelState& model, std::span<const LabeledExample> batch_new,
                      std::span<const LabeledExample> batch_mem,
                      const std::vector<int>& classes_in_batch,
                      const std::vector<int>& classes_seen) {
  if (batch_new.empty()) throw PreconditionError("loss: empty batch");
  LossResult r{0.0, Gradients::zeros_like(model)};
  r.loss = ce_batch(model, batch_new, classes_in_batch, 1.0, r.grads);
  if (!batch_mem.empty()) {
    r.loss += ce_batch(model, batch_mem, classes_seen, 1.0, r.grads);
  }
  return r;
}

std::string MemoryBuffer::to_json() const {
  nlohmann::json j;
  j["capacity"] = capacity_;
  j["store_logits"] = store_logits_;
  j["stream_count"] = stream_count_;
  j["seed"] = seed_;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json je;
    je["id"] = e.example.id;
    je["features"] = e.example.features;
    je["label"] = e.label;
    if (!e.logits.empty()) je["logits"] = e.logits;
    if (!e.gss_grad.empty()) {
      je["gss_grad"] = e.gss_grad;
      je["gss_score"] = e.gss_score;
    }
    j["entries"].push_back(std::move(je));
  }
  return j.dump();
}

MemoryBuffer MemoryBuffer::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("buffer json: ") + e.what());
  }
  try {
    MemoryBuffer b(j.at("capacity").get<std::size_t>(), j.at("store_logits").get<bool>(),
                   j.at("seed").get<std::uint64_t>());
    b.stream_count_ = j.at("stream_count").get<std::uint64_t>();
    for (const auto& je : j.at("entries")) {
      BufferEntry e;
      e.example.id = je.at("id").get<std::int64_t>();
      e.example.features = je.at("features").get<std::vector<double>>();
      e.label = je.at("label").get<int>();
      e.example.hidden_label = e.label;
      if (je.contains("logits")) e.logits = je.at("logits").get<std::vector<double>>();
      if (je.contains("gss_grad")) {
        e.gss_grad = je.at("gss_grad").get<std::vector<double>>();
        e.gss_score = je.at("gss_score").get<double>();
      }
      b.entries_.push_back(std::move(e));
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("buffer json: ") + e.what());
  }
}

}  // namespace accl
