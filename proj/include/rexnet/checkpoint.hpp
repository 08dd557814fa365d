// Copyright (c) 2026 The RexNet Authors. All rights reserved.
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

#ifndef REXNET_CHECKPOINT_HPP
#define REXNET_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "rexnet/layers.hpp"

namespace rexnet {

/// Checkpoint directory: manifest.json listing named tensors in order,
/// one RXT1 blob per tensor.
void save_checkpoint(const std::string& dir, const std::vector<ParamView>& params);

/// Loads values back into the given views; names and dims must match the
/// manifest exactly.
void load_checkpoint(const std::string& dir, std::vector<ParamView>& params);

}  // namespace rexnet

#endif  // REXNET_CHECKPOINT_HPP
