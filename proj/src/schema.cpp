// schema.cpp
#include "evobt/schema.hpp"

#include <fstream>

namespace evobt {

namespace {

bool type_matches(const nlohmann::json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "number") return v.is_number();
    if (type == "integer") return v.is_number_integer();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    return false;
}

}  // namespace

std::vector<std::string> validate_schema(const nlohmann::json& instance,
                                         const nlohmann::json& schema,
                                         const std::string& where) {
    std::vector<std::string> errs;

    if (schema.contains("type")) {
        const auto& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(instance, t.get<std::string>());
        } else if (t.is_array()) {
            for (const auto& alt : t)
                if (type_matches(instance, alt.get<std::string>())) ok = true;
        }
        if (!ok) {
            errs.push_back(where + ": expected type " + t.dump() + ", got " +
                           std::string(instance.type_name()));
            return errs;
        }
    }

    if (schema.contains("enum")) {
        bool ok = false;
        for (const auto& v : schema["enum"])
            if (v == instance) ok = true;
        if (!ok) errs.push_back(where + ": value not in enum");
    }

    if (instance.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!instance.contains(key.get<std::string>()))
                    errs.push_back(where + ": missing required key '" + key.get<std::string>() +
                                   "'");
        const auto props = schema.contains("properties") ? schema["properties"]
                                                         : nlohmann::json::object();
        for (auto it = instance.begin(); it != instance.end(); ++it) {
            if (props.contains(it.key())) {
                const auto sub = validate_schema(it.value(), props[it.key()],
                                                 where + "." + it.key());
                errs.insert(errs.end(), sub.begin(), sub.end());
            } else if (schema.contains("additionalProperties") &&
                       schema["additionalProperties"].is_boolean() &&
                       !schema["additionalProperties"].get<bool>()) {
                errs.push_back(where + ": unexpected key '" + it.key() + "'");
            }
        }
    }

    if (instance.is_array() && schema.contains("items")) {
        for (std::size_t i = 0; i < instance.size(); ++i) {
            const auto sub = validate_schema(instance[i], schema["items"],
                                             where + "[" + std::to_string(i) + "]");
            errs.insert(errs.end(), sub.begin(), sub.end());
        }
    }
    return errs;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

}  // namespace evobt
