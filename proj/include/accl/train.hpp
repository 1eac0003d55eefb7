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

#ifndef ACCL_TRAIN_HPP_
#define ACCL_TRAIN_HPP_

#include <cstdint>

#include "accl/continual.hpp"
#include "accl/model.hpp"
#include "accl/scenario.hpp"

namespace accl {

struct TrainStats {
  std::vector<double> epoch_losses;  // mean mini-batch loss per epoch
};

// Mini-batch SGD with momentum on the method's composite loss, replaying
// the memory buffer per step. Bit-deterministic for a fixed seed. epochs = 0
// returns the initial model unchanged. Throws PreconditionError on an empty
// labeled set and DivergenceError (naming epoch/batch) on a non-finite loss.
ModelState train(const ModelState& init, const LabeledSet& labeled, const MemoryBuffer& memory,
                 const CLMethodConfig& method, const OptimizerConfig& opt, std::uint64_t seed,
                 TrainStats* stats = nullptr);

}  // namespace accl

#endif  // ACCL_TRAIN_HPP_
