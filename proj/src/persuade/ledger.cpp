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

#include "persuade/ledger.hpp"

#include <fstream>

namespace persuade {

Ledger::Ledger(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void Ledger::append(const nlohmann::json& record) {
    std::lock_guard lock(mu_);
    std::ofstream os(path_, std::ios::app);
    if (!os) throw IoError("ledger: cannot append to " + path_.string());
    os << record.dump() << '\n';
    os.flush();
    if (!os) throw IoError("ledger: write failed");
}

std::vector<nlohmann::json> Ledger::read() const {
    std::lock_guard lock(mu_);
    std::vector<nlohmann::json> out;
    std::ifstream is(path_);
    if (!is) return out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("ledger line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

ALState replay(const std::vector<nlohmann::json>& records) {
    ALState s;
    bool initialised = false;
    for (const auto& r : records) {
        const auto type = r.at("type").get<std::string>();
        if (type == "init") {
            s = initial_state(r.at("ids").get<std::vector<std::string>>(), r.at("k").get<std::size_t>());
            initialised = true;
        } else if (type == "ingest") {
            for (const auto& id : r.at("ids").get<std::vector<std::string>>())
                if (!s.labeled_ids.count(id)) s.pool_ids.insert(id);
        } else if (type == "round") {
            if (!initialised) throw ParseError("ledger: round record before init");
            apply_round(s, round_from_json(r.at("record")));
        }
    }
    return s;
}

ALState replay_ledger(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw NotFoundError("ledger: " + path.string() + " does not exist");
    return replay(Ledger(path).read());
}

}  // namespace persuade
