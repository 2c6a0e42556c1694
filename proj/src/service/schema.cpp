#include "muse/service/schema.hpp"

#include <cmath>

#include "muse/common/error.hpp"
#include "muse/common/file.hpp"

namespace muse::service {

namespace {

bool has_type(const nlohmann::json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer")
        return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    return false;
}

class Validator {
public:
    explicit Validator(const nlohmann::json& root) : root_(root) {}

    void check(const nlohmann::json& s, const nlohmann::json& v, const std::string& at) {
        if (s.is_boolean()) {
            if (!s.get<bool>()) error(at, "no value allowed");
            return;
        }
        if (s.contains("$ref")) {
            check(resolve(s["$ref"].get<std::string>()), v, at);
            return;
        }
        if (s.contains("type")) {
            const auto& t = s["type"];
            bool ok = false;
            if (t.is_string()) ok = has_type(v, t);
            else
                for (const auto& name : t) ok = ok || has_type(v, name);
            if (!ok) {
                error(at, "expected type " + t.dump() + ", got " + v.type_name());
                return;
            }
        }
        if (s.contains("enum")) {
            bool found = false;
            for (const auto& e : s["enum"]) found = found || e == v;
            if (!found) error(at, "value " + v.dump() + " not in " + s["enum"].dump());
        }
        if (s.contains("const") && s["const"] != v) error(at, "expected " + s["const"].dump());
        if (v.is_number()) {
            const double x = v.get<double>();
            if (s.contains("minimum") && x < s["minimum"].get<double>()) error(at, "below minimum");
            if (s.contains("maximum") && x > s["maximum"].get<double>()) error(at, "above maximum");
        }
        if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<size_t>())
            error(at, "string too short");
        if (v.is_object()) object(s, v, at);
        if (v.is_array()) array(s, v, at);
        if (s.contains("anyOf")) {
            bool any = false;
            for (const auto& sub : s["anyOf"]) any = any || passes(sub, v);
            if (!any) error(at, "matches no anyOf branch");
        }
        if (s.contains("oneOf")) {
            int n = 0;
            for (const auto& sub : s["oneOf"]) n += passes(sub, v) ? 1 : 0;
            if (n != 1) error(at, "matches " + std::to_string(n) + " oneOf branches");
        }
    }

    std::vector<std::string> errors;

private:
    void error(const std::string& at, const std::string& what) { errors.push_back((at.empty() ? "/" : at) + ": " + what); }

    bool passes(const nlohmann::json& s, const nlohmann::json& v) {
        Validator sub(root_);
        sub.check(s, v, "");
        return sub.errors.empty();
    }

    const nlohmann::json& resolve(const std::string& ref) {
        if (ref.rfind("#/", 0) != 0) throw Error(ErrorCode::InvalidArgument, "only local $ref supported: " + ref);
        const nlohmann::json* node = &root_;
        size_t pos = 2;
        while (pos <= ref.size()) {
            const size_t end = std::min(ref.find('/', pos), ref.size());
            const std::string key = ref.substr(pos, end - pos);
            if (!node->contains(key)) throw Error(ErrorCode::InvalidArgument, "dangling $ref " + ref);
            node = &(*node)[key];
            pos = end + 1;
        }
        return *node;
    }

    void object(const nlohmann::json& s, const nlohmann::json& v, const std::string& at) {
        if (s.contains("required"))
            for (const auto& key : s["required"])
                if (!v.contains(key.get<std::string>())) error(at, "missing required property '" + key.get<std::string>() + "'");
        const nlohmann::json empty = nlohmann::json::object();
        const auto& props = s.contains("properties") ? s["properties"] : empty;
        for (const auto& [key, value] : v.items()) {
            const std::string child = at + "/" + key;
            if (props.contains(key)) {
                check(props[key], value, child);
            } else if (s.contains("additionalProperties")) {
                const auto& extra = s["additionalProperties"];
                if (extra.is_boolean() && !extra.get<bool>())
                    error(child, "property not allowed");
                else if (extra.is_object())
                    check(extra, value, child);
            }
        }
    }

    void array(const nlohmann::json& s, const nlohmann::json& v, const std::string& at) {
        if (s.contains("minItems") && v.size() < s["minItems"].get<size_t>()) error(at, "too few items");
        if (s.contains("maxItems") && v.size() > s["maxItems"].get<size_t>()) error(at, "too many items");
        if (s.contains("items"))
            for (size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "/" + std::to_string(i));
    }

    const nlohmann::json& root_;
};

}  // namespace

std::vector<std::string> validate(const nlohmann::json& schema, const nlohmann::json& instance) {
    Validator v(schema);
    v.check(schema, instance, "");
    return v.errors;
}

std::map<std::string, nlohmann::json> load_schemas(const std::filesystem::path& directory) {
    const std::string suffix = ".schema.json";
    std::map<std::string, nlohmann::json> out;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        const std::string name = entry.path().filename().string();
        if (name.size() <= suffix.size() || name.substr(name.size() - suffix.size()) != suffix) continue;
        try {
            out[name.substr(0, name.size() - suffix.size())] = nlohmann::json::parse(read_file(entry.path()));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidArgument, name + ": " + e.what());
        }
    }
    return out;
}

}  // namespace muse::service
