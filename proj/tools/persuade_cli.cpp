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

// Command-line front end. Talks to the library only through the C API.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "persuade/persuade.h"

namespace {

using nlohmann::json;

struct Failure {
    psd_status status;
};

void check(psd_status s) {
    if (s != PSD_OK) throw Failure{s};
}

json take(char* text) {
    json j = json::parse(text);
    psd_string_free(text);
    return j;
}

void print_ids(const json& selected) {
    for (const auto& s : selected["selected"]) std::cout << s["sample_id"].get<std::string>() << '\n';
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

class Session {
public:
    Session(const std::string& data_dir, const std::string& config) {
        check(psd_service_open(data_dir.c_str(), config.empty() ? nullptr : config.c_str(), &svc_));
    }
    ~Session() { psd_service_close(svc_); }
    psd_service* get() const { return svc_; }

private:
    psd_service* svc_ = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"persuade: active-learning annotation and training for persuasion strategies"};
    app.require_subcommand(1);

    std::string data_dir = env_or("PERSUADE_DATA_DIR", "persuade-data");
    std::string config;
    app.add_option("--data-dir", data_dir, "Service data directory (env PERSUADE_DATA_DIR)");
    app.add_option("--config", config, "JSON overlay for config.json");

    auto* ingest = app.add_subcommand("ingest", "Ingest a JSONL corpus manifest");
    std::string manifest;
    ingest->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

    auto* serve = app.add_subcommand("serve", "Run the REST API");
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string tokens = env_or("PERSUADE_AUTH_TOKENS", "");
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--tokens", tokens, "Token file (env PERSUADE_AUTH_TOKENS); unset disables auth");

    auto* open_round = app.add_subcommand("open-round", "Select a batch and assign annotators");
    std::size_t k = 0;
    std::vector<std::string> ids;
    open_round->add_option("--k", k, "Batch size (default from config)");
    open_round->add_option("--ids", ids, "Explicit sample ids")->delimiter(',');

    auto* close_round = app.add_subcommand("close-round", "Close a fully resolved round and retrain");
    int round_t = -1;
    close_round->add_option("--round", round_t, "Round number (default: the open round)");

    auto* status = app.add_subcommand("status", "Progress of a round");
    status->add_option("--round", round_t, "Round number (default: the open round)");

    app.add_subcommand("train", "Train on every available label and publish a checkpoint");

    auto* evaluate = app.add_subcommand("evaluate", "Evaluate the published checkpoint");
    std::string split = "test";
    evaluate->add_option("--split", split)->check(CLI::IsMember({"train", "val", "test"}));

    auto* select = app.add_subcommand("select-batch", "Print the k most uncertain sample ids");
    std::size_t select_k = 250;
    std::string checkpoint, pool;
    select->add_option("--k", select_k);
    select->add_option("--checkpoint", checkpoint)->check(CLI::ExistingFile);
    select->add_option("--pool", pool, "Pool manifest (requires --checkpoint)")->check(CLI::ExistingFile);

    app.add_subcommand("analyze", "Corpus statistics, co-occurrence, agreement");

    auto* replay = app.add_subcommand("replay-ledger", "Rebuild the active-learning state from a ledger");
    std::string ledger;
    replay->add_option("ledger", ledger)->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        char* out = nullptr;
        auto print = [&](char* text) { std::cout << take(text).dump(2) << '\n'; };
        auto resolve_round = [&](psd_service* svc) {
            if (round_t >= 0) return round_t;
            int t = 0;
            check(psd_current_round(svc, &t));
            return t;
        };

        if (replay->parsed()) {
            check(psd_replay_ledger(ledger.c_str(), &out));
            print(out);
            return 0;
        }
        if (select->parsed() && !checkpoint.empty()) {
            if (pool.empty()) throw CLI::ValidationError("--checkpoint needs --pool");
            check(psd_select_from_manifest(checkpoint.c_str(), pool.c_str(), select_k,
                                           env_or("PERSUADE_EXTRACTORS", "stub").c_str(), &out));
            print_ids(take(out));
            return 0;
        }

        Session session(data_dir, config);
        psd_service* svc = session.get();
        if (ingest->parsed()) {
            check(psd_ingest(svc, manifest.c_str(), &out));
            print(out);
        } else if (serve->parsed()) {
            std::cerr << "serving on " << host << ':' << port << (tokens.empty() ? " (auth disabled)" : "") << '\n';
            check(psd_serve(svc, host.c_str(), port, tokens.empty() ? nullptr : tokens.c_str()));
        } else if (open_round->parsed()) {
            json req = json::object();
            if (k > 0) req["k"] = k;
            if (!ids.empty()) req["ids"] = ids;
            check(psd_open_round(svc, req.dump().c_str(), &out));
            json r = take(out);
            std::cout << "round " << r["round_t"] << ": " << r["sample_ids"].size() << " samples, "
                      << r["assignments"].size() << " assignments\n";
        } else if (close_round->parsed()) {
            check(psd_close_round(svc, resolve_round(svc), &out));
            print(out);
        } else if (status->parsed()) {
            check(psd_round_status(svc, resolve_round(svc), &out));
            print(out);
        } else if (app.got_subcommand("train")) {
            check(psd_train(svc, &out));
            json r = take(out);
            r.erase("log");
            std::cout << r.dump(2) << '\n';
        } else if (evaluate->parsed()) {
            check(psd_evaluate(svc, split.c_str(), &out));
            print(out);
        } else if (select->parsed()) {
            check(psd_select_batch(svc, select_k, &out));
            print_ids(take(out));
        } else if (app.got_subcommand("analyze")) {
            check(psd_analyze(svc, &out));
            print(out);
        }
    } catch (const Failure& f) {
        std::cerr << "error: " << psd_status_name(f.status) << ": " << psd_last_error() << '\n';
        return 1;
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    return 0;
}
