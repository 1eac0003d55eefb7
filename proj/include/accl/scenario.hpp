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

#ifndef ACCL_SCENARIO_HPP_
#define ACCL_SCENARIO_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace accl {

struct Example {
  std::int64_t id = 0;
  std::vector<double> features;
  int hidden_label = -1;  // consulted only by the oracle and by test evaluation
};

struct LabeledExample {
  Example example;
  int label = -1;
};

struct LabeledSet {
  std::vector<LabeledExample> entries;

  bool empty() const { return entries.empty(); }
  std::size_t size() const { return entries.size(); }
};

struct Task {
  std::vector<int> classes;        // disjoint across tasks
  std::vector<Example> pool;       // unlabeled pool U_t
  std::vector<Example> test;       // held-out, labels visible to evaluation
};

struct TaskStream {
  std::vector<Task> tasks;
  int total_classes = 0;
  std::size_t num_features = 0;

  // Checks class disjointness, label membership, and id uniqueness.
  void validate() const;  // throws ConfigError
};

// Flat labeled dataset prior to task splitting.
struct Dataset {
  std::vector<Example> pool;
  std::vector<Example> test;
  int num_classes = 0;
  std::size_t num_features = 0;
};

struct SyntheticSpec {
  int num_classes = 10;
  std::size_t pool_per_class = 500;
  std::size_t test_per_class = 200;
  std::size_t num_features = 16;
  double class_mean_scale = 3.0;
  double covariance_scale = 1.0;  // isotropic standard deviation
  std::uint64_t seed = 1;
};

// Gaussian class clusters with means drawn uniformly from the sphere of
// radius class_mean_scale. Deterministic per seed; pool and test disjoint.
Dataset generate_synthetic(const SyntheticSpec& spec);

// MNIST-style IDX ingestion. Pixels are scaled to [0, 1], row-major.
std::vector<LabeledExample> load_idx(const std::string& images_path,
                                     const std::string& labels_path);

// Inverse of load_idx at the byte level (one image per row vector).
void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::vector<std::uint8_t>>& images, std::size_t rows,
               std::size_t cols, const std::vector<std::uint8_t>& labels);

// CSV with header `id,label,f0,...,f{n-1}`.
std::vector<LabeledExample> load_csv(const std::string& path);

// Partitions classes into tasks of `classes_per_task` consecutive classes,
// then reorders the tasks by `task_order` (a permutation of task indices).
TaskStream split_by_class(const Dataset& data, int classes_per_task,
                          const std::vector<int>& task_order);

// Hidden-label oracle with once-only consumption and per-task budgets.
// Single-writer: label() mutates consumption state.
class LabelOracle {
 public:
  explicit LabelOracle(const TaskStream& stream);

  void begin_task(std::size_t task_index,
                  std::size_t budget = std::numeric_limits<std::size_t>::max());

  // Labels the given pool ids of the current task. Unknown ids, repeated ids,
  // and budget overruns throw (ProtocolError / BudgetError).
  LabeledSet label(std::span<const std::int64_t> ids);

  std::size_t labels_issued(std::size_t task_index) const;
  std::size_t current_task() const { return task_; }

 private:
  const TaskStream* stream_;
  std::size_t task_ = 0;
  bool task_open_ = false;
  std::size_t budget_ = 0;
  std::vector<std::size_t> issued_;
  std::unordered_set<std::int64_t> consumed_;
  std::unordered_map<std::int64_t, const Example*> index_;  // current task pool
};

// JSON (de)serialization for reproducibility checks and checkpointing.
std::string stream_to_json(const TaskStream& stream);
TaskStream stream_from_json(const std::string& text);

}  // namespace accl

#endif  // ACCL_SCENARIO_HPP_
