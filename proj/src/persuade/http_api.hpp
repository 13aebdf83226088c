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
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "persuade/error.hpp"
#include "persuade/service.hpp"

namespace persuade {

/// Static bearer tokens, one per annotator. An empty table disables auth.
struct AuthTokens {
    std::map<std::string, std::string> annotator_by_token;

    bool enabled() const noexcept { return !annotator_by_token.empty(); }
    std::optional<std::string> annotator(const std::string& token) const;
};

/// Lines of "<annotator_id> <token>"; blank lines and '#' comments skipped.
AuthTokens load_auth_tokens(const std::filesystem::path& path);

int http_status_for(ErrorCode code) noexcept;

/// REST front end over an AnnotationService.
class HttpApi {
public:
    HttpApi(AnnotationService& service, AuthTokens tokens);
    ~HttpApi();
    HttpApi(const HttpApi&) = delete;
    HttpApi& operator=(const HttpApi&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks until stop().
    void listen();
    /// Runs listen() on a background thread and waits until ready.
    void start();
    void stop();
    int port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace persuade
