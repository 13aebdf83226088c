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

// nlohmann::json conversions for configuration and report types.

#include "json.hpp"
#include "persuade/fusion_model.hpp"
#include "persuade/metrics.hpp"
#include "persuade/taxonomy.hpp"
#include "persuade/trainer.hpp"

namespace persuade {

using Json = nlohmann::json;

void to_json(Json& j, const ExtractorConfig& c);
void from_json(const Json& j, ExtractorConfig& c);
void to_json(Json& j, const ModelConfig& c);
void from_json(const Json& j, ModelConfig& c);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);
void to_json(Json& j, const EvalReport& r);
void from_json(const Json& j, EvalReport& r);
void to_json(Json& j, const StrategySet& s);
void from_json(const Json& j, StrategySet& s);

Json taxonomy_to_json(const Taxonomy& t);
Json dice_matrix_to_json(const DiceMatrix& m);
Json stats_to_json(const DatasetStats& s, const Taxonomy& t);

}  // namespace persuade
