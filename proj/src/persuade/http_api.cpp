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

#include "persuade/http_api.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"

namespace persuade {

using nlohmann::json;

std::optional<std::string> AuthTokens::annotator(const std::string& token) const {
    auto it = annotator_by_token.find(token);
    if (it == annotator_by_token.end()) return std::nullopt;
    return it->second;
}

AuthTokens load_auth_tokens(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw NotFoundError("auth tokens: cannot read " + path.string());
    AuthTokens t;
    std::string line;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        std::istringstream ls(line);
        std::string who, token;
        if (!(ls >> who) || who[0] == '#') continue;
        if (!(ls >> token)) throw ParseError("auth tokens line " + std::to_string(n) + ": missing token");
        t.annotator_by_token[token] = who;
    }
    return t;
}

int http_status_for(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return 200;
        case ErrorCode::Parse:
        case ErrorCode::InvalidArgument:
        case ErrorCode::Shape: return 400;
        case ErrorCode::Unauthorized: return 401;
        case ErrorCode::NoAssignment: return 403;
        case ErrorCode::NotFound:
        case ErrorCode::UnknownRound: return 404;
        case ErrorCode::Conflict:
        case ErrorCode::DuplicateId:
        case ErrorCode::RoundNotClosable:
        case ErrorCode::EmptyPool:
        case ErrorCode::RosterTooSmall: return 409;
        case ErrorCode::Validation:
        case ErrorCode::DimensionMismatch:
        case ErrorCode::StrategyNotInFinalLabels:
        case ErrorCode::InsufficientAnnotations:
        case ErrorCode::Decode: return 422;
        case ErrorCode::BackendUnavailable: return 503;
        default: return 500;
    }
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, http_status_for(code),
              {{"accepted", false}, {"error", std::string(error_code_name(code))}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ParseError(std::string("request body: ") + e.what());
    }
}

std::string content_type_for(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return "image/x-portable-anymap";
    return "application/octet-stream";
}

}  // namespace

struct HttpApi::Impl {
    AnnotationService& svc;
    AuthTokens tokens;
    httplib::Server server;
    std::thread thread;

    Impl(AnnotationService& s, AuthTokens t) : svc(s), tokens(std::move(t)) {}

    /// Annotator behind the request's bearer token; nullopt when auth is off.
    std::optional<std::string> caller(const httplib::Request& req) const {
        if (!tokens.enabled()) return std::nullopt;
        const auto h = req.get_header_value("Authorization");
        const std::string prefix = "Bearer ";
        if (h.rfind(prefix, 0) != 0) throw UnauthorizedError("missing bearer token");
        auto who = tokens.annotator(h.substr(prefix.size()));
        if (!who) throw UnauthorizedError("unknown token");
        return who;
    }

    void check_identity(const std::optional<std::string>& who, const std::string& claimed) const {
        if (who && *who != claimed) throw UnauthorizedError("token belongs to '" + *who + "', not '" + claimed + "'");
    }

    template <class F>
    httplib::Server::Handler guarded(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            try {
                f(req, res);
            } catch (const Error& e) {
                send_error(res, e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, ErrorCode::Parse, e.what());
            } catch (const std::exception& e) {
                send_error(res, ErrorCode::Internal, e.what());
            }
        };
    }

    void routes() {
        server.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, {{"ok", true}});
        });

        server.Get("/api/taxonomy", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            send_json(res, 200, taxonomy_to_json(svc.taxonomy()));
        }));

        server.Get(R"(/api/rounds/(\d+)/assignments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto who = caller(req);
            std::string annotator = req.get_param_value("annotator");
            if (annotator.empty()) {
                if (!who) throw InvalidArgumentError("annotator query parameter is required");
                annotator = *who;
            }
            check_identity(who, annotator);
            const int t = std::stoi(req.matches[1]);
            json items = json::array();
            for (const auto& p : svc.pending_assignments(t, annotator)) items.push_back(to_json(p));
            send_json(res, 200, {{"round_t", t}, {"annotator_id", annotator}, {"assignments", items}});
        }));

        server.Post("/api/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto who = caller(req);
            const auto record = annotation_from_json(parse_body(req));
            check_identity(who, record.annotator_id);
            send_json(res, 200, to_json(svc.submit_annotation(record)));
        }));

        server.Post("/api/masks", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto who = caller(req);
            const auto mask = mask_from_json(parse_body(req));
            check_identity(who, mask.annotator_id);
            send_json(res, 200, to_json(svc.submit_mask(mask)));
        }));

        server.Get(R"(/api/rounds/(\d+)/status)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            send_json(res, 200, to_json(svc.round_status(std::stoi(req.matches[1]))));
        }));

        server.Post("/api/rounds", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            const auto body = parse_body(req);
            std::optional<std::size_t> k;
            std::optional<std::vector<std::string>> ids;
            if (body.contains("k")) k = body["k"].get<std::size_t>();
            if (body.contains("ids")) ids = body["ids"].get<std::vector<std::string>>();
            send_json(res, 201, to_json(svc.open_round(k, ids)));
        }));

        server.Post(R"(/api/rounds/(\d+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            send_json(res, 200, to_json(svc.close_round_and_train(std::stoi(req.matches[1]))));
        }));

        server.Get("/api/metrics/latest", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            const auto m = svc.latest_metrics();
            const auto h = svc.published_checkpoint_hash();
            if (!m || !h) throw NotFoundError("no published checkpoint yet");
            send_json(res, 200, {{"checkpoint_hash", *h}, {"metrics", *m}});
        }));

        server.Get(R"(/api/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            caller(req);
            const auto s = svc.sample(req.matches[1]);
            if (!s) throw NotFoundError("unknown sample");
            std::ifstream is(s->sample.image_ref, std::ios::binary);
            if (!is) throw NotFoundError("image file unavailable");
            std::ostringstream buf;
            buf << is.rdbuf();
            res.set_content(buf.str(), content_type_for(s->sample.image_ref));
        }));
    }
};

HttpApi::HttpApi(AnnotationService& service, AuthTokens tokens)
    : impl_(std::make_unique<Impl>(service, std::move(tokens))) {
    impl_->routes();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw IoError("http: cannot bind " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port)) throw IoError("http: cannot bind " + host + ":" + std::to_string(port));
        port_ = port;
    }
    return port_;
}

void HttpApi::listen() { impl_->server.listen_after_bind(); }

void HttpApi::start() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void HttpApi::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace persuade
