#pragma once

#include "mssp/mdp.hpp"

#include <json.hpp>

#include <string>

namespace mssp {

/// Parses the standard instance format:
///   { "states": [...], "actions": [...],
///     "transitions": [{"from","action","to","prob"}, ...],
///     "agents": [{"init": "s", "targets": [...]}, ...] }
/// Duplicate (from, action, to) triples are rejected, and the result must
/// pass validate_instance; the first violation is thrown as Error.
MsspInstance parse_instance(const nlohmann::json& j);
MsspInstance load_instance(const std::string& path);

/// Serializes an instance; metadata (when nonempty) is emitted verbatim
/// under a top-level "metadata" key.
nlohmann::json instance_to_json(const MsspInstance& instance,
                                const nlohmann::json& metadata = nlohmann::json());
void save_instance(const MsspInstance& instance, const std::string& path,
                   const nlohmann::json& metadata = nlohmann::json());

/// Profile format: {"agents": [...]} where a memoryless entry is
///   {"decision": {state: {action: prob}}}
/// and a finite-memory entry is
///   {"mem": [...], "init_mem": m,
///    "next": {state: {mem: {action: prob}}},
///    "update": {state: {mem: {action: {mem: prob}}}}}.
Profile parse_profile(const nlohmann::json& j, const Mdp& mdp);
Profile load_profile(const std::string& path, const Mdp& mdp);
nlohmann::json profile_to_json(const Profile& pi, const Mdp& mdp);
void save_profile(const Profile& pi, const Mdp& mdp, const std::string& path);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const nlohmann::json& j, const std::string& path);

} // namespace mssp
