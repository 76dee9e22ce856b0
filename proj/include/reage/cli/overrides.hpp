#pragma once

#include "reage/core/error.hpp"
#include "reage/datamodel/clip_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace reage::cli {

/// JSON pointers of every object member named `key`.
inline void find_key(const nlohmann::json& j, const std::string& key, const std::string& at,
                     std::vector<std::string>& hits)
{
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string here = at + "/" + it.key();
        if (it.key() == key) hits.push_back(here);
        find_key(it.value(), key, here, hits);
    }
}

/// Applies "name=value". `name` is a field name found anywhere in the config
/// (must be unique) or a dotted path. `value` is parsed as JSON, falling back
/// to a plain string.
inline void apply_override(nlohmann::json& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not name=value");
    const std::string name = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    std::string pointer;
    if (name.find('.') != std::string::npos) {
        pointer = "/" + name;
        for (char& c : pointer)
            if (c == '.') c = '/';
        if (!config.contains(nlohmann::json::json_pointer(pointer)))
            throw ConfigError("unknown config field '" + name + "'");
    } else {
        std::vector<std::string> hits;
        find_key(config, name, "", hits);
        if (hits.empty()) throw ConfigError("unknown config field '" + name + "'");
        if (hits.size() > 1) {
            std::string all;
            for (const auto& h : hits) all += " " + h.substr(1);
            throw ConfigError("config field '" + name + "' is ambiguous, use a dotted path:" + all);
        }
        pointer = hits.front();
    }
    auto& slot = config[nlohmann::json::json_pointer(pointer)];
    const bool same_kind = slot.is_null() || slot.type() == value.type() || (slot.is_number() && value.is_number());
    if (!same_kind)
        throw ConfigError("override '" + name + "' expects " + std::string(slot.type_name()) + ", got " +
                          value.type_name());
    slot = value;
}

/// Defaults, then the config file (if any), then overrides, round-tripped
/// through Config so the result is complete and typed. A snapshot written by
/// an earlier run ({"command", "config"}) is accepted as a config file.
template <typename Config>
Config resolve_config(const std::string& file, const std::vector<std::string>& overrides)
{
    Config c{};
    if (!file.empty()) {
        if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file);
        nlohmann::json j;
        try {
            j = read_json_file(file);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (j.is_object() && j.contains("command") && j.contains("config")) j = j["config"];
        try {
            c = j.get<Config>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file " + file + ": " + e.what());
        }
    }
    nlohmann::json full = c;
    for (const auto& o : overrides) apply_override(full, o);
    try {
        return full.get<Config>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config override: ") + e.what());
    }
}

} // namespace reage::cli
