#pragma once

// JSON views of the domain types that cross a file or wire boundary.

#include <initializer_list>
#include <string_view>

#include <json.hpp>

#include "vatkg/kg.hpp"

namespace vatkg {

using Json = nlohmann::json;

Json graph_to_json(const KnowledgeGraph& graph);
Json sample_to_json(const MultimodalSample& sample);
Json triplet_to_json(const MultimodalTriplet& triplet);
Json concept_to_json(const Concept& c);
Json stats_to_json(const StatsReport& stats);

/// Throws SchemaError if `obj` is not an object, lacks a required key, or
/// carries a key outside required ∪ optional.
void check_keys(const Json& obj, std::initializer_list<std::string_view> required,
                std::initializer_list<std::string_view> optional, std::string_view where);

/// Throws SchemaError unless obj[key] exists and is a string.
std::string json_string(const Json& obj, std::string_view key, std::string_view where);

/// Pretty-printed with two-space indent and a trailing newline.
std::string dump_json(const Json& value);

}  // namespace vatkg
