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

#include "persuade/persuade.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "persuade/http_api.hpp"
#include "persuade/service.hpp"

using nlohmann::json;
using namespace persuade;

struct psd_service {
    std::unique_ptr<AnnotationService> impl;
};

struct psd_server {
    std::unique_ptr<HttpApi> impl;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <class F>
psd_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return PSD_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return static_cast<psd_status>(e.code());
    } catch (const json::exception& e) {
        g_last_error = e.what();
        return PSD_PARSE_ERROR;
    } catch (const std::filesystem::filesystem_error& e) {
        g_last_error = e.what();
        return PSD_IO_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return PSD_INTERNAL_ERROR;
    } catch (...) {
        g_last_error = "unknown failure";
        return PSD_INTERNAL_ERROR;
    }
}

template <class F>
psd_status json_call(psd_service* svc, char** out, F&& f) {
    return guard([&] {
        if (!svc || !svc->impl) throw InvalidArgumentError("null service handle");
        if (!out) throw InvalidArgumentError("null output pointer");
        *out = nullptr;
        *out = dup_string(f(*svc->impl).dump());
    });
}

const char* require(const char* s, const char* what) {
    if (!s) throw InvalidArgumentError(std::string(what) + " is null");
    return s;
}

json parse_arg(const char* text, const char* what) {
    try {
        return json::parse(require(text, what));
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

}  // namespace

extern "C" {

const char* psd_version(void) { return "0.1.0"; }

const char* psd_status_name(psd_status status) {
    static thread_local std::string name;
    name = std::string(error_code_name(static_cast<ErrorCode>(status)));
    return name.c_str();
}

const char* psd_last_error(void) { return g_last_error.c_str(); }

void psd_string_free(char* s) { std::free(s); }

psd_status psd_service_open(const char* data_dir, const char* config_json, psd_service** out) {
    return guard([&] {
        if (!out) throw InvalidArgumentError("null output pointer");
        *out = nullptr;
        auto cfg = load_service_config(require(data_dir, "data_dir"));
        if (config_json) apply_config_json(cfg, parse_arg(config_json, "config"));
        auto svc = std::make_unique<psd_service>();
        svc->impl = std::make_unique<AnnotationService>(std::move(cfg));
        *out = svc.release();
    });
}

void psd_service_close(psd_service* svc) { delete svc; }

psd_status psd_ingest(psd_service* svc, const char* manifest_path, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        const auto r = s.ingest(require(manifest_path, "manifest_path"));
        return json{{"ingested", r.ingested}, {"skipped", r.skipped}};
    });
}

psd_status psd_open_round(psd_service* svc, const char* request_json, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        std::optional<std::size_t> k;
        std::optional<std::vector<std::string>> ids;
        if (request_json) {
            const auto req = parse_arg(request_json, "request");
            if (req.contains("k")) k = req["k"].get<std::size_t>();
            if (req.contains("ids")) ids = req["ids"].get<std::vector<std::string>>();
        }
        return to_json(s.open_round(k, ids));
    });
}

psd_status psd_current_round(psd_service* svc, int* round_t) {
    return guard([&] {
        if (!svc || !svc->impl || !round_t) throw InvalidArgumentError("null argument");
        const auto r = svc->impl->current_round();
        if (!r) throw NotFoundError("no round is open");
        *round_t = *r;
    });
}

psd_status psd_pending_assignments(psd_service* svc, int round_t, const char* annotator_id, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        json items = json::array();
        for (const auto& p : s.pending_assignments(round_t, require(annotator_id, "annotator_id")))
            items.push_back(to_json(p));
        return json{{"round_t", round_t}, {"annotator_id", annotator_id}, {"assignments", items}};
    });
}

psd_status psd_submit_annotation(psd_service* svc, const char* record_json, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        return to_json(s.submit_annotation(annotation_from_json(parse_arg(record_json, "record"))));
    });
}

psd_status psd_submit_mask(psd_service* svc, const char* mask_json, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        return to_json(s.submit_mask(mask_from_json(parse_arg(mask_json, "mask"))));
    });
}

psd_status psd_round_status(psd_service* svc, int round_t, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) { return to_json(s.round_status(round_t)); });
}

psd_status psd_close_round(psd_service* svc, int round_t, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) { return to_json(s.close_round_and_train(round_t)); });
}

psd_status psd_train(psd_service* svc, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        const auto r = s.train_all();
        json log = json::array();
        for (const auto& e : r.result.log)
            log.push_back({{"epoch", e.epoch},
                           {"strategy_loss", e.strategy_loss},
                           {"generation_loss", e.generation_loss},
                           {"top1", e.top1},
                           {"top3", e.top3}});
        return json{{"checkpoint_hash", r.checkpoint_hash},
                    {"n_examples", r.n_examples},
                    {"metrics", r.metrics},
                    {"log", log}};
    });
}

psd_status psd_evaluate(psd_service* svc, const char* split, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        const std::string sp = split ? split : "test";
        return json{{"split", sp}, {"metrics", s.evaluate(sp)}};
    });
}

psd_status psd_select_batch(psd_service* svc, size_t k, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        const auto ranked = s.rank_current_pool();
        json items = json::array();
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) items.push_back(to_json(ranked[i]));
        return json{{"selected", items}};
    });
}

psd_status psd_analyze(psd_service* svc, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) { return s.analyze(); });
}

psd_status psd_state(psd_service* svc, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) { return state_to_json(s.state()); });
}

psd_status psd_latest_metrics(psd_service* svc, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) {
        const auto m = s.latest_metrics();
        const auto h = s.published_checkpoint_hash();
        if (!m || !h) throw NotFoundError("no published checkpoint yet");
        return json{{"checkpoint_hash", *h}, {"metrics", *m}};
    });
}

psd_status psd_taxonomy(psd_service* svc, char** out_json) {
    return json_call(svc, out_json, [&](AnnotationService& s) { return taxonomy_to_json(s.taxonomy()); });
}

psd_status psd_select_from_manifest(const char* checkpoint_path, const char* manifest_path, size_t k,
                                    const char* extractors, char** out_json) {
    return guard([&] {
        if (!out_json) throw InvalidArgumentError("null output pointer");
        *out_json = nullptr;
        const auto ranked = select_from_manifest(require(checkpoint_path, "checkpoint_path"),
                                                 require(manifest_path, "manifest_path"), k,
                                                 extractors ? extractors : "stub");
        json items = json::array();
        for (const auto& r : ranked) items.push_back(to_json(r));
        *out_json = dup_string(json{{"selected", items}}.dump());
    });
}

psd_status psd_replay_ledger(const char* ledger_path, char** out_state_json) {
    return guard([&] {
        if (!out_state_json) throw InvalidArgumentError("null output pointer");
        *out_state_json = nullptr;
        *out_state_json = dup_string(state_to_json(replay_ledger(require(ledger_path, "ledger_path"))).dump());
    });
}

psd_status psd_uncertainty(const double* probs, size_t n, double* out) {
    return guard([&] {
        if (!probs || !out) throw InvalidArgumentError("null argument");
        *out = uncertainty(Eigen::Map<const Vector>(probs, static_cast<Eigen::Index>(n)));
    });
}

psd_status psd_server_start(psd_service* svc, const char* host, int port, const char* token_file, psd_server** out,
                            int* bound_port) {
    return guard([&] {
        if (!svc || !svc->impl || !out) throw InvalidArgumentError("null argument");
        *out = nullptr;
        AuthTokens tokens = token_file ? load_auth_tokens(token_file) : AuthTokens{};
        auto server = std::make_unique<psd_server>();
        server->impl = std::make_unique<HttpApi>(*svc->impl, std::move(tokens));
        const int p = server->impl->bind(host ? host : "127.0.0.1", port);
        server->impl->start();
        if (bound_port) *bound_port = p;
        *out = server.release();
    });
}

void psd_server_stop(psd_server* server) { delete server; }

psd_status psd_serve(psd_service* svc, const char* host, int port, const char* token_file) {
    return guard([&] {
        if (!svc || !svc->impl) throw InvalidArgumentError("null service handle");
        AuthTokens tokens = token_file ? load_auth_tokens(token_file) : AuthTokens{};
        HttpApi api(*svc->impl, std::move(tokens));
        api.bind(host ? host : "127.0.0.1", port);
        api.listen();
    });
}

}  // extern "C"
