// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "persuade/fusion_model.hpp"
#include "persuade/trainer.hpp"

namespace persuade {

struct LoadedCheckpoint {
    std::unique_ptr<FusionModel> model;
    TrainConfig train_config;
    /// sha256 of the checkpoint file.
    std::string hash;
};

/// Writes magic, a JSON header (configs, class ids, taxonomy hash, vocabulary,
/// parameter shapes) and the raw parameter values. Atomic via rename.
/// Returns the file's sha256.
std::string save_checkpoint(const std::filesystem::path& path, const FusionModel& model, const TrainConfig& train);

/// Throws TaxonomyMismatch when `expected_taxonomy_hash` is given and differs,
/// ParseError on a corrupt or truncated file.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path,
                                 const std::optional<std::string>& expected_taxonomy_hash = std::nullopt);

}  // namespace persuade
