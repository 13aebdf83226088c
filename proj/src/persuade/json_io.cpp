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

#include "persuade/json_io.hpp"

namespace persuade {

namespace {

template <class T>
void read_opt(const Json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

void to_json(Json& j, const ExtractorConfig& c) {
    j = Json{{"d_model", c.d_model},       {"ocr_max_tokens", c.ocr_max_tokens}, {"image_side", c.image_side},
             {"patch_side", c.patch_side}, {"n_roi", c.n_roi},                   {"n_cap", c.n_cap},
             {"backbone_dim", c.backbone_dim}, {"n_symbols", c.n_symbols}};
}

void from_json(const Json& j, ExtractorConfig& c) {
    read_opt(j, "d_model", c.d_model);
    read_opt(j, "ocr_max_tokens", c.ocr_max_tokens);
    read_opt(j, "image_side", c.image_side);
    read_opt(j, "patch_side", c.patch_side);
    read_opt(j, "n_roi", c.n_roi);
    read_opt(j, "n_cap", c.n_cap);
    read_opt(j, "backbone_dim", c.backbone_dim);
    read_opt(j, "n_symbols", c.n_symbols);
}

void to_json(Json& j, const ModelConfig& c) {
    j = Json{{"extractor", c.extractor},
             {"n_heads", c.n_heads},
             {"ff_dim", c.ff_dim},
             {"n_encoder_layers", c.n_encoder_layers},
             {"dropout", c.dropout},
             {"n_decoder_layers", c.n_decoder_layers},
             {"decoder_heads", c.decoder_heads},
             {"decoder_ff_dim", c.decoder_ff_dim},
             {"max_target_len", c.max_target_len}};
}

void from_json(const Json& j, ModelConfig& c) {
    read_opt(j, "extractor", c.extractor);
    read_opt(j, "n_heads", c.n_heads);
    read_opt(j, "ff_dim", c.ff_dim);
    read_opt(j, "n_encoder_layers", c.n_encoder_layers);
    read_opt(j, "dropout", c.dropout);
    read_opt(j, "n_decoder_layers", c.n_decoder_layers);
    read_opt(j, "decoder_heads", c.decoder_heads);
    read_opt(j, "decoder_ff_dim", c.decoder_ff_dim);
    read_opt(j, "max_target_len", c.max_target_len);
}

void to_json(Json& j, const TrainConfig& c) {
    j = Json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
             {"epochs", c.epochs},               {"lambda_gen", c.lambda_gen},
             {"seed", c.seed},                   {"focal", c.focal},
             {"focal_gamma", c.focal_gamma},     {"max_grad_norm", c.max_grad_norm},
             {"eval_each_epoch", c.eval_each_epoch}};
}

void from_json(const Json& j, TrainConfig& c) {
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "epochs", c.epochs);
    read_opt(j, "lambda_gen", c.lambda_gen);
    read_opt(j, "seed", c.seed);
    read_opt(j, "focal", c.focal);
    read_opt(j, "focal_gamma", c.focal_gamma);
    read_opt(j, "max_grad_norm", c.max_grad_norm);
    read_opt(j, "eval_each_epoch", c.eval_each_epoch);
}

void to_json(Json& j, const EvalReport& r) {
    j = Json{{"top1", r.top1}, {"top3", r.top3}, {"recall", r.recall}, {"n_samples", r.n_samples}};
}

void from_json(const Json& j, EvalReport& r) {
    j.at("top1").get_to(r.top1);
    j.at("top3").get_to(r.top3);
    j.at("recall").get_to(r.recall);
    j.at("n_samples").get_to(r.n_samples);
}

void to_json(Json& j, const StrategySet& s) { j = s.ids(); }

void from_json(const Json& j, StrategySet& s) {
    if (!j.is_array()) throw ValidationError("labels must be an array of strategy ids");
    s = StrategySet(j.get<std::vector<std::string>>());
}

Json taxonomy_to_json(const Taxonomy& t) {
    Json groups = Json::array();
    for (const auto& g : t.groups()) groups.push_back({{"name", g.name}, {"marker", g.marker}});
    Json strategies = Json::array();
    for (const auto& s : t.strategies())
        strategies.push_back({{"id", s.id},
                              {"display_name", s.display_name},
                              {"group", s.group},
                              {"definition", s.definition},
                              {"marker", s.marker}});
    return {{"hash", t.hash()},
            {"max_strategies_per_ad", kMaxStrategiesPerAd},
            {"groups", groups},
            {"strategies", strategies}};
}

Json dice_matrix_to_json(const DiceMatrix& m) {
    Json values = Json::array();
    for (Eigen::Index r = 0; r < m.values.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.values.cols(); ++c) row.push_back(m.values(r, c));
        values.push_back(row);
    }
    return {{"rows", m.row_ids}, {"cols", m.col_ids}, {"values", values}};
}

Json stats_to_json(const DatasetStats& s, const Taxonomy& t) {
    Json per = Json::object();
    for (std::size_t i = 0; i < s.per_strategy.size(); ++i) per[t.at(i).id] = s.per_strategy[i];
    return {{"n_ads", s.n_ads},
            {"per_strategy", per},
            {"ads_with_1", s.ads_with[0]},
            {"ads_with_2", s.ads_with[1]},
            {"ads_with_3", s.ads_with[2]},
            {"mean_strategies", s.mean},
            {"std_strategies", s.stddev}};
}

}  // namespace persuade
