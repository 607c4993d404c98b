#include "graphrank/response_schemas.hpp"

namespace graphrank::provider::schemas {

namespace {
using Check = std::optional<std::string>;
}

ResponseSchema classify() {
    return {"classify", [](const Json& j) -> Check {
                if (!j.is_object()) return "expected a JSON object";
                if (!j.contains("super") || !j["super"].is_string() ||
                    j["super"].get<std::string>().empty()) {
                    return "missing non-empty string field 'super'";
                }
                if (j.contains("sub") && !j["sub"].is_string()) {
                    return "field 'sub' must be a string";
                }
                return std::nullopt;
            }};
}

ResponseSchema schema_gen() {
    return {"schema_gen", [](const Json& j) -> Check {
                if (!j.is_array()) return "expected a JSON array of attribute objects";
                for (const auto& item : j) {
                    if (!item.is_object()) return "array items must be objects";
                    if (!item.contains("name") || !item["name"].is_string() ||
                        item["name"].get<std::string>().empty()) {
                        return "each item needs a non-empty string 'name'";
                    }
                    if (item.contains("description") && !item["description"].is_string()) {
                        return "'description' must be a string";
                    }
                }
                return std::nullopt;
            }};
}

ResponseSchema extraction() {
    return {"extract", [](const Json& j) -> Check {
                if (!j.is_object()) return "expected a flat JSON object of attribute/value pairs";
                for (const auto& [key, value] : j.items()) {
                    (void)key;
                    if (!value.is_string() && !value.is_number() && !value.is_boolean() &&
                        !value.is_null()) {
                        return "values must be strings, numbers, booleans, or null";
                    }
                }
                return std::nullopt;
            }};
}

ResponseSchema rank_scores() {
    return {"rank_scores", [](const Json& j) -> Check {
                if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
                    return "expected {\"scores\": [...]}";
                }
                for (const auto& item : j["scores"]) {
                    if (!item.is_object() || !item.contains("id") || !item["id"].is_string() ||
                        !item.contains("score") || !item["score"].is_number()) {
                        return "each score entry needs a string 'id' and a numeric 'score'";
                    }
                }
                return std::nullopt;
            }};
}

ResponseSchema judge() {
    return {"judge", [](const Json& j) -> Check {
                if (!j.is_object() || !j.contains("score") || !j["score"].is_number()) {
                    return "expected {\"score\": <number>}";
                }
                return std::nullopt;
            }};
}

}  // namespace graphrank::provider::schemas
