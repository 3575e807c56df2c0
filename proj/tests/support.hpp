#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#ifndef GRIDMESH_SOURCE_DIR
#define GRIDMESH_SOURCE_DIR "."
#endif

namespace gridmesh_test {

using nlohmann::json;

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    json j;
    f >> j;
    return j;
}

inline json load_schema(const std::string& name) {
    return load_json(std::string(GRIDMESH_SOURCE_DIR) + "/schemas/" + name);
}

// Minimal structural validator: type / required / properties / items / $ref
// into local $defs. Returns an error description or empty on success.
inline std::string validate_against(const json& schema, const json& value, const json& root,
                                    const std::string& where = "$") {
    if (schema.contains("$ref")) {
        std::string ref = schema["$ref"].get<std::string>();
        const std::string prefix = "#/$defs/";
        if (ref.rfind(prefix, 0) != 0) return where + ": unsupported $ref " + ref;
        return validate_against(root["$defs"][ref.substr(prefix.size())], value, root, where);
    }
    if (schema.contains("type")) {
        std::string t = schema["type"].get<std::string>();
        bool ok = (t == "object" && value.is_object()) || (t == "array" && value.is_array()) ||
                  (t == "string" && value.is_string()) || (t == "boolean" && value.is_boolean()) ||
                  (t == "number" && value.is_number()) || (t == "integer" && value.is_number_integer());
        if (!ok) return where + ": expected " + t;
    }
    if (schema.contains("required"))
        for (const auto& key : schema["required"])
            if (!value.contains(key.get<std::string>()))
                return where + ": missing required key " + key.get<std::string>();
    if (schema.contains("properties"))
        for (auto it = schema["properties"].begin(); it != schema["properties"].end(); ++it)
            if (value.contains(it.key())) {
                std::string err = validate_against(it.value(), value[it.key()], root,
                                                   where + "." + it.key());
                if (!err.empty()) return err;
            }
    if (schema.contains("items") && value.is_array()) {
        int i = 0;
        for (const auto& item : value) {
            std::string err = validate_against(schema["items"], item, root,
                                               where + "[" + std::to_string(i++) + "]");
            if (!err.empty()) return err;
        }
    }
    return "";
}

inline std::string validate_schema(const std::string& schema_file, const json& value) {
    json schema = load_schema(schema_file);
    return validate_against(schema, value, schema);
}

// scratch directory per test binary run
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("gridmesh_" + tag);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace gridmesh_test
