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

#include "accl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "accl/errors.hpp"
#include "accl/rng.hpp"

namespace accl {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& path, std::size_t offset) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) {
    throw FormatError(path + ": truncated at offset " + std::to_string(offset));
  }
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

std::vector<double> unit_sphere_point(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

void TaskStream::validate() const {
  std::unordered_set<int> seen_classes;
  std::unordered_set<std::int64_t> seen_ids;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    std::unordered_set<int> task_classes(task.classes.begin(), task.classes.end());
    for (int c : task.classes) {
      if (c < 0 || c >= total_classes)
        throw ConfigError("stream: class " + std::to_string(c) + " out of range");
      if (!seen_classes.insert(c).second)
        throw ConfigError("stream: class " + std::to_string(c) + " appears in multiple tasks");
    }
    auto check_examples = [&](const std::vector<Example>& xs, const char* kind) {
      for (const Example& e : xs) {
        if (!seen_ids.insert(e.id).second)
          throw ConfigError("stream: duplicate example id " + std::to_string(e.id));
        if (!task_classes.count(e.hidden_label))
          throw ConfigError("stream: task " + std::to_string(t) + " " + kind + " example " +
                            std::to_string(e.id) + " has label outside the task's classes");
        if (e.features.size() != num_features)
          throw ConfigError("stream: example " + std::to_string(e.id) + " feature width mismatch");
        for (double f : e.features) {
          if (!std::isfinite(f))
            throw ConfigError("stream: example " + std::to_string(e.id) + " has non-finite feature");
        }
      }
    };
    check_examples(task.pool, "pool");
    check_examples(task.test, "test");
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) throw ConfigError("synthetic: need at least 2 classes");
  if (spec.pool_per_class < 1 || spec.test_per_class < 1)
    throw ConfigError("synthetic: per-class counts must be >= 1");
  if (spec.num_features == 0) throw ConfigError("synthetic: zero features");
  if (!(spec.class_mean_scale >= 0.0) || !(spec.covariance_scale >= 0.0))
    throw ConfigError("synthetic: scales must be nonnegative");

  Rng rng(Rng::mix(spec.seed, 0x73796e7468ULL));
  std::vector<std::vector<double>> means;
  means.reserve(spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    auto m = unit_sphere_point(spec.num_features, rng);
    for (double& x : m) x *= spec.class_mean_scale;
    means.push_back(std::move(m));
  }

  Dataset ds;
  ds.num_classes = spec.num_classes;
  ds.num_features = spec.num_features;
  std::int64_t next_id = 0;
  auto draw = [&](int c) {
    Example e;
    e.id = next_id++;
    e.hidden_label = c;
    e.features.resize(spec.num_features);
    for (std::size_t i = 0; i < spec.num_features; ++i) {
      e.features[i] = means[c][i] + spec.covariance_scale * rng.normal();
    }
    return e;
  };
  for (int c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.pool_per_class; ++i) ds.pool.push_back(draw(c));
  }
  for (int c = 0; c < spec.num_classes; ++c) {
    for (std::size_t i = 0; i < spec.test_per_class; ++i) ds.test.push_back(draw(c));
  }
  return ds;
}

std::vector<LabeledExample> load_idx(const std::string& images_path,
                                     const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open");
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open");

  const std::uint32_t img_magic = read_u32_be(img, images_path, 0);
  if (img_magic != kIdxImagesMagic)
    throw FormatError(images_path + ": bad magic at offset 0 (expected 0x00000803)");
  const std::uint32_t n_images = read_u32_be(img, images_path, 4);
  const std::uint32_t rows = read_u32_be(img, images_path, 8);
  const std::uint32_t cols = read_u32_be(img, images_path, 12);

  const std::uint32_t lab_magic = read_u32_be(lab, labels_path, 0);
  if (lab_magic != kIdxLabelsMagic)
    throw FormatError(labels_path + ": bad magic at offset 0 (expected 0x00000801)");
  const std::uint32_t n_labels = read_u32_be(lab, labels_path, 4);
  if (n_images != n_labels) {
    throw FormatError(images_path + ": image count " + std::to_string(n_images) +
                      " does not match label count " + std::to_string(n_labels) +
                      " (offset 4 of both headers)");
  }

  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<LabeledExample> out;
  out.reserve(n_images);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!img)
      throw FormatError(images_path + ": truncated at offset " +
                        std::to_string(16 + std::size_t(i) * pixels));
    unsigned char label = 0;
    lab.read(reinterpret_cast<char*>(&label), 1);
    if (!lab)
      throw FormatError(labels_path + ": truncated at offset " + std::to_string(8 + i));
    LabeledExample le;
    le.example.id = static_cast<std::int64_t>(i);
    le.example.features.resize(pixels);
    for (std::size_t p = 0; p < pixels; ++p) le.example.features[p] = buf[p] / 255.0;
    le.example.hidden_label = label;
    le.label = label;
    out.push_back(std::move(le));
  }
  return out;
}

void write_idx(const std::string& images_path, const std::string& labels_path,
               const std::vector<std::vector<std::uint8_t>>& images, std::size_t rows,
               std::size_t cols, const std::vector<std::uint8_t>& labels) {
  if (images.size() != labels.size())
    throw FormatError("write_idx: image/label count mismatch");
  const std::size_t pixels = rows * cols;
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw FormatError(images_path + ": cannot open for writing");
  write_u32_be(img, kIdxImagesMagic);
  write_u32_be(img, static_cast<std::uint32_t>(images.size()));
  write_u32_be(img, static_cast<std::uint32_t>(rows));
  write_u32_be(img, static_cast<std::uint32_t>(cols));
  for (const auto& image : images) {
    if (image.size() != pixels) throw FormatError("write_idx: image pixel count mismatch");
    img.write(reinterpret_cast<const char*>(image.data()), static_cast<std::streamsize>(pixels));
  }
  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw FormatError(labels_path + ": cannot open for writing");
  write_u32_be(lab, kIdxLabelsMagic);
  write_u32_be(lab, static_cast<std::uint32_t>(labels.size()));
  lab.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

std::vector<LabeledExample> load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty file");
  if (line.rfind("id,label,", 0) != 0)
    throw FormatError(path + ": header must start with `id,label,f0,...`");
  const std::size_t n_features =
      static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) - 1;

  std::vector<LabeledExample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    LabeledExample le;
    try {
      if (!std::getline(ss, cell, ',')) throw std::invalid_argument("id");
      le.example.id = std::stoll(cell);
      if (!std::getline(ss, cell, ',')) throw std::invalid_argument("label");
      le.label = std::stoi(cell);
      le.example.hidden_label = le.label;
      while (std::getline(ss, cell, ',')) le.example.features.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw FormatError(path + ": malformed row at line " + std::to_string(lineno));
    }
    if (le.example.features.size() != n_features)
      throw FormatError(path + ": line " + std::to_string(lineno) + " has " +
                        std::to_string(le.example.features.size()) + " features, expected " +
                        std::to_string(n_features));
    out.push_back(std::move(le));
  }
  return out;
}

TaskStream split_by_class(const Dataset& data, int classes_per_task,
                          const std::vector<int>& task_order) {
  if (classes_per_task < 1) throw ConfigError("split: classes_per_task must be >= 1");
  if (data.num_classes % classes_per_task != 0)
    throw ConfigError("split: total class count " + std::to_string(data.num_classes) +
                      " not divisible by classes_per_task " + std::to_string(classes_per_task));
  const std::size_t num_tasks = static_cast<std::size_t>(data.num_classes / classes_per_task);
  if (task_order.size() != num_tasks)
    throw ConfigError("split: task_order length must equal the task count");
  std::vector<bool> seen(num_tasks, false);
  for (int t : task_order) {
    if (t < 0 || static_cast<std::size_t>(t) >= num_tasks || seen[t])
      throw ConfigError("split: task_order is not a permutation of 0.." +
                        std::to_string(num_tasks - 1));
    seen[t] = true;
  }

  TaskStream stream;
  stream.total_classes = data.num_classes;
  stream.num_features = data.num_features;
  stream.tasks.resize(num_tasks);
  for (std::size_t slot = 0; slot < num_tasks; ++slot) {
    const int block = task_order[slot];
    Task& task = stream.tasks[slot];
    for (int c = block * classes_per_task; c < (block + 1) * classes_per_task; ++c) {
      task.classes.push_back(c);
    }
    for (const Example& e : data.pool) {
      if (e.hidden_label / classes_per_task == block) task.pool.push_back(e);
    }
    for (const Example& e : data.test) {
      if (e.hidden_label / classes_per_task == block) task.test.push_back(e);
    }
  }
  stream.validate();
  return stream;
}

LabelOracle::LabelOracle(const TaskStream& stream) : stream_(&stream) {
  issued_.assign(stream.tasks.size(), 0);
}

void LabelOracle::begin_task(std::size_t task_index, std::size_t budget) {
  if (task_index >= stream_->tasks.size())
    throw ProtocolError("oracle: task index out of range");
  task_ = task_index;
  task_open_ = true;
  budget_ = budget;
  index_.clear();
  for (const Example& e : stream_->tasks[task_index].pool) index_[e.id] = &e;
}

LabeledSet LabelOracle::label(std::span<const std::int64_t> ids) {
  if (!task_open_) throw ProtocolError("oracle: no task in progress (call begin_task)");
  if (issued_[task_] + ids.size() > budget_)
    throw BudgetError("oracle: labeling " + std::to_string(ids.size()) +
                      " ids would exceed the task budget of " + std::to_string(budget_));
  LabeledSet out;
  out.entries.reserve(ids.size());
  for (std::int64_t id : ids) {
    auto it = index_.find(id);
    if (it == index_.end())
      throw ProtocolError("oracle: id " + std::to_string(id) +
                          " is not in the current task's pool");
    if (!consumed_.insert(id).second)
      throw ProtocolError("oracle: id " + std::to_string(id) + " was already labeled");
    out.entries.push_back({*it->second, it->second->hidden_label});
  }
  issued_[task_] += ids.size();
  return out;
}

std::size_t LabelOracle::labels_issued(std::size_t task_index) const {
  return issued_.at(task_index);
}

namespace {

nlohmann::json example_to_json(const Example& e) {
  return nlohmann::json{{"id", e.id}, {"features", e.features}, {"label", e.hidden_label}};
}

Example example_from_json(const nlohmann::json& j) {
  Example e;
  e.id = j.at("id").get<std::int64_t>();
  e.features = j.at("features").get<std::vector<double>>();
  e.hidden_label = j.at("label").get<int>();
  return e;
}

}  // namespace

std::string stream_to_json(const TaskStream& stream) {
  nlohmann::json j;
  j["total_classes"] = stream.total_classes;
  j["num_features"] = stream.num_features;
  j["tasks"] = nlohmann::json::array();
  for (const Task& t : stream.tasks) {
    nlohmann::json jt;
    jt["classes"] = t.classes;
    jt["pool"] = nlohmann::json::array();
    for (const Example& e : t.pool) jt["pool"].push_back(example_to_json(e));
    jt["test"] = nlohmann::json::array();
    for (const Example& e : t.test) jt["test"].push_back(example_to_json(e));
    j["tasks"].push_back(std::move(jt));
  }
  return j.dump();
}

TaskStream stream_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("stream json: ") + e.what());
  }
  TaskStream stream;
  try {
    stream.total_classes = j.at("total_classes").get<int>();
    stream.num_features = j.at("num_features").get<std::size_t>();
    for (const auto& jt : j.at("tasks")) {
      Task t;
      t.classes = jt.at("classes").get<std::vector<int>>();
      for (const auto& je : jt.at("pool")) t.pool.push_back(example_from_json(je));
      for (const auto& je : jt.at("test")) t.test.push_back(example_from_json(je));
      stream.tasks.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("stream json: ") + e.what());
  }
  stream.validate();
  return stream;
}

}  // namespace accl
