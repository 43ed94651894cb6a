#pragma once

// Canonical JSON conventions shared by all machine-readable outputs: object
// keys sorted lexicographically, no insignificant whitespace, arrays in
// semantic order, one trailing newline. nlohmann::json's default object type
// iterates keys in sorted order, so dump() already emits the canonical form.

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "avmas/errors.hpp"

namespace avmas::jsonu {

using nlohmann::json;

inline std::string canonical_bytes(const json& value) { return value.dump() + "\n"; }

inline json parse_text(std::string_view text, const std::string& context) {
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) {
        throw SchemaError(context, "malformed JSON");
    }
    return value;
}

inline const json& member(const json& object, const std::string& context, std::string_view key) {
    if (!object.is_object()) {
        throw SchemaError(context, "expected a JSON object");
    }
    auto it = object.find(key);
    if (it == object.end()) {
        throw SchemaError(context + "." + std::string(key), "missing required field");
    }
    return *it;
}

inline std::string req_string(const json& object, const std::string& context, std::string_view key) {
    const json& value = member(object, context, key);
    if (!value.is_string()) {
        throw SchemaError(context + "." + std::string(key), "must be a string");
    }
    return value.get<std::string>();
}

inline std::uint64_t req_uint(const json& object, const std::string& context, std::string_view key) {
    const json& value = member(object, context, key);
    if (!value.is_number_unsigned()) {
        throw SchemaError(context + "." + std::string(key), "must be a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

inline bool req_bool(const json& object, const std::string& context, std::string_view key) {
    const json& value = member(object, context, key);
    if (!value.is_boolean()) {
        throw SchemaError(context + "." + std::string(key), "must be a boolean");
    }
    return value.get<bool>();
}

inline const json& req_array(const json& object, const std::string& context, std::string_view key) {
    const json& value = member(object, context, key);
    if (!value.is_array()) {
        throw SchemaError(context + "." + std::string(key), "must be an array");
    }
    return value;
}

inline const json& req_object(const json& object, const std::string& context, std::string_view key) {
    const json& value = member(object, context, key);
    if (!value.is_object()) {
        throw SchemaError(context + "." + std::string(key), "must be an object");
    }
    return value;
}

/// Rejects any key of `object` not in `allowed`.
inline void reject_unknown(const json& object, const std::string& context,
                           std::initializer_list<std::string_view> allowed) {
    if (!object.is_object()) {
        throw SchemaError(context, "expected a JSON object");
    }
    for (const auto& [key, value] : object.items()) {
        bool known = false;
        for (std::string_view candidate : allowed) {
            if (key == candidate) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw SchemaError(context + "." + key, "unknown field");
        }
    }
}

}  // namespace avmas::jsonu
