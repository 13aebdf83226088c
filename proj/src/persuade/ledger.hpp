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
#include <mutex>
#include <vector>

#include "json.hpp"
#include "persuade/active_learning.hpp"

namespace persuade {

/// Append-only JSON-lines log of pool and round transitions.
///
/// Record types: {"type":"init","k":K,"ids":[...]}, {"type":"ingest","ids":[...]},
/// {"type":"open_round",...} (audit only) and {"type":"round",...} carrying a
/// full RoundRecord. Replaying init, ingest and round records rebuilds ALState.
class Ledger {
public:
    explicit Ledger(std::filesystem::path path);

    void append(const nlohmann::json& record);
    std::vector<nlohmann::json> read() const;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    mutable std::mutex mu_;
};

ALState replay(const std::vector<nlohmann::json>& records);
/// Throws NotFound when the file is missing and ParseError on a malformed line.
ALState replay_ledger(const std::filesystem::path& path);

}  // namespace persuade
