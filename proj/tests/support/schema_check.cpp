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

#include "schema_check.hpp"

#include <fstream>
#include <stdexcept>

#ifndef PERSUADE_API_SCHEMA_DIR
#define PERSUADE_API_SCHEMA_DIR "docs/api"
#endif

namespace persuade::testkit {

namespace {

bool has_type(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

}  // namespace

std::vector<std::string> schema_violations(const nlohmann::json& schema, const nlohmann::json& value,
                                           const std::string& where) {
    std::vector<std::string> out;
    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_array()) {
            for (const auto& x : t) ok = ok || has_type(value, x.get<std::string>());
        } else {
            ok = has_type(value, t.get<std::string>());
        }
        if (!ok) {
            out.push_back(where + ": expected " + t.dump() + ", got " + value.type_name());
            return out;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& e : schema["enum"]) found = found || e == value;
        if (!found) out.push_back(where + ": " + value.dump() + " not in enum");
    }
    if (value.is_object()) {
        for (const auto& key : schema.value("required", nlohmann::json::array()))
            if (!value.contains(key.get<std::string>())) out.push_back(where + ": missing '" + key.get<std::string>() + "'");
        if (schema.contains("properties"))
            for (const auto& [key, sub] : schema["properties"].items())
                if (value.contains(key)) {
                    auto more = schema_violations(sub, value[key], where + "." + key);
                    out.insert(out.end(), more.begin(), more.end());
                }
    }
    if (value.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < value.size(); ++i) {
            auto more = schema_violations(schema["items"], value[i], where + "[" + std::to_string(i) + "]");
            out.insert(out.end(), more.begin(), more.end());
        }
    }
    return out;
}

nlohmann::json load_api_schema(const std::string& name) {
    const auto path = std::filesystem::path(PERSUADE_API_SCHEMA_DIR) / (name + ".schema.json");
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open schema " + path.string());
    return nlohmann::json::parse(is);
}

}  // namespace persuade::testkit
