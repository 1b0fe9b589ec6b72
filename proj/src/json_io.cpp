#include "mssp/json_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace mssp {

namespace {

using nlohmann::json;

const json& require_key(const json& j, const char* key, const char* where) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw Error(std::string(where) + " is missing the '" + key + "' field");
    }
    return *it;
}

std::vector<std::string> parse_names(const json& arr, const char* kind) {
    if (!arr.is_array() || arr.empty()) {
        throw Error(std::string(kind) + " must be a nonempty array");
    }
    std::vector<std::string> names;
    std::set<std::string> seen;
    for (const auto& item : arr) {
        std::string name = item.get<std::string>();
        if (!seen.insert(name).second) {
            throw Error(std::string("duplicate ") + kind + " identifier '" + name + "'");
        }
        names.push_back(std::move(name));
    }
    return names;
}

} // namespace

MsspInstance parse_instance(const json& j) {
    MsspInstance instance;
    instance.mdp.states = parse_names(require_key(j, "states", "instance"), "state");
    instance.mdp.actions = parse_names(require_key(j, "actions", "instance"), "action");
    instance.mdp.init_table();

    for (const auto& tr : require_key(j, "transitions", "instance")) {
        instance.mdp.add(require_key(tr, "from", "transition").get<std::string>(),
                         require_key(tr, "action", "transition").get<std::string>(),
                         require_key(tr, "to", "transition").get<std::string>(),
                         require_key(tr, "prob", "transition").get<double>());
    }

    for (const auto& agent : require_key(j, "agents", "instance")) {
        AgentTask task;
        task.init = instance.mdp.state_index(
            require_key(agent, "init", "agent").get<std::string>());
        for (const auto& t : require_key(agent, "targets", "agent")) {
            task.targets.push_back(instance.mdp.state_index(t.get<std::string>()));
        }
        std::sort(task.targets.begin(), task.targets.end());
        task.targets.erase(std::unique(task.targets.begin(), task.targets.end()),
                           task.targets.end());
        instance.agents.push_back(std::move(task));
    }

    ValidationReport report = validate_instance(instance);
    if (!report.ok()) throw Error(report.issues.front());
    return instance;
}

MsspInstance load_instance(const std::string& path) {
    return parse_instance(load_json_file(path));
}

json instance_to_json(const MsspInstance& instance, const json& metadata) {
    const Mdp& mdp = instance.mdp;
    json j;
    j["states"] = mdp.states;
    j["actions"] = mdp.actions;
    json transitions = json::array();
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int a = 0; a < mdp.num_actions(); ++a) {
            for (const auto& tr : mdp.trans[s][a]) {
                transitions.push_back({{"from", mdp.states[s]},
                                       {"action", mdp.actions[a]},
                                       {"to", mdp.states[tr.to]},
                                       {"prob", tr.prob}});
            }
        }
    }
    j["transitions"] = std::move(transitions);
    json agents = json::array();
    for (const auto& agent : instance.agents) {
        json targets = json::array();
        for (int t : agent.targets) targets.push_back(mdp.states[t]);
        agents.push_back({{"init", mdp.states[agent.init]}, {"targets", targets}});
    }
    j["agents"] = std::move(agents);
    if (!metadata.is_null() && !metadata.empty()) j["metadata"] = metadata;
    return j;
}

void save_instance(const MsspInstance& instance, const std::string& path,
                   const json& metadata) {
    save_json_file(instance_to_json(instance, metadata), path);
}

Profile parse_profile(const json& j, const Mdp& mdp) {
    Profile pi;
    for (const auto& entry : require_key(j, "agents", "profile")) {
        if (entry.contains("decision")) {
            MemorylessStrategy sigma;
            sigma.decision.resize(mdp.states.size());
            for (const auto& [state, dist] : entry["decision"].items()) {
                int s = mdp.state_index(state);
                for (const auto& [action, prob] : dist.items()) {
                    sigma.decision[s].push_back(
                        {mdp.action_index(action), prob.get<double>()});
                }
            }
            for (int s = 0; s < mdp.num_states(); ++s) {
                if (sigma.decision[s].empty()) {
                    throw Error("profile strategy does not cover state " + mdp.states[s]);
                }
            }
            pi.strategies.emplace_back(std::move(sigma));
        } else {
            FiniteMemoryStrategy sigma;
            sigma.mem = parse_names(require_key(entry, "mem", "strategy"), "memory state");
            auto mem_index = [&sigma](const std::string& name) {
                auto it = std::find(sigma.mem.begin(), sigma.mem.end(), name);
                if (it == sigma.mem.end()) {
                    throw Error("unknown memory state '" + name + "'");
                }
                return static_cast<int>(it - sigma.mem.begin());
            };
            sigma.init_mem =
                mem_index(require_key(entry, "init_mem", "strategy").get<std::string>());
            const int n = sigma.num_mem();
            sigma.next.assign(mdp.states.size(),
                              std::vector<std::vector<ActionProb>>(n));
            sigma.update.assign(mdp.states.size(),
                                std::vector<std::vector<std::vector<MemProb>>>(n));
            for (int s = 0; s < mdp.num_states(); ++s) {
                for (int m = 0; m < n; ++m) {
                    sigma.update[s][m].resize(mdp.enabled(s).size());
                }
            }
            for (const auto& [state, by_mem] : require_key(entry, "next", "strategy").items()) {
                int s = mdp.state_index(state);
                for (const auto& [mem, dist] : by_mem.items()) {
                    int m = mem_index(mem);
                    for (const auto& [action, prob] : dist.items()) {
                        sigma.next[s][m].push_back(
                            {mdp.action_index(action), prob.get<double>()});
                    }
                }
            }
            for (const auto& [state, by_mem] :
                 require_key(entry, "update", "strategy").items()) {
                int s = mdp.state_index(state);
                const auto en = mdp.enabled(s);
                for (const auto& [mem, by_action] : by_mem.items()) {
                    int m = mem_index(mem);
                    for (const auto& [action, dist] : by_action.items()) {
                        int a = mdp.action_index(action);
                        auto it = std::find(en.begin(), en.end(), a);
                        if (it == en.end()) {
                            throw Error("update entry for disabled action '" + action +
                                        "' in state " + state);
                        }
                        auto& slot = sigma.update[s][m][it - en.begin()];
                        for (const auto& [mem2, prob] : dist.items()) {
                            slot.push_back({mem_index(mem2), prob.get<double>()});
                        }
                    }
                }
            }
            pi.strategies.emplace_back(std::move(sigma));
        }
    }
    return pi;
}

Profile load_profile(const std::string& path, const Mdp& mdp) {
    return parse_profile(load_json_file(path), mdp);
}

json profile_to_json(const Profile& pi, const Mdp& mdp) {
    json agents = json::array();
    for (const auto& strategy : pi.strategies) {
        json entry;
        if (const auto* sigma = std::get_if<MemorylessStrategy>(&strategy)) {
            json decision = json::object();
            for (int s = 0; s < mdp.num_states(); ++s) {
                json dist = json::object();
                for (const auto& ap : sigma->decision[s]) {
                    dist[mdp.actions[ap.action]] = ap.prob;
                }
                decision[mdp.states[s]] = std::move(dist);
            }
            entry["decision"] = std::move(decision);
        } else {
            const auto& fms = std::get<FiniteMemoryStrategy>(strategy);
            entry["mem"] = fms.mem;
            entry["init_mem"] = fms.mem[fms.init_mem];
            json next = json::object();
            json update = json::object();
            for (int s = 0; s < mdp.num_states(); ++s) {
                const auto en = mdp.enabled(s);
                json next_by_mem = json::object();
                json update_by_mem = json::object();
                for (int m = 0; m < fms.num_mem(); ++m) {
                    json dist = json::object();
                    for (const auto& ap : fms.next[s][m]) {
                        dist[mdp.actions[ap.action]] = ap.prob;
                    }
                    next_by_mem[fms.mem[m]] = std::move(dist);
                    json by_action = json::object();
                    for (std::size_t ei = 0; ei < en.size(); ++ei) {
                        json mdist = json::object();
                        for (const auto& mp : fms.update[s][m][ei]) {
                            mdist[fms.mem[mp.mem]] = mp.prob;
                        }
                        by_action[mdp.actions[en[ei]]] = std::move(mdist);
                    }
                    update_by_mem[fms.mem[m]] = std::move(by_action);
                }
                next[mdp.states[s]] = std::move(next_by_mem);
                update[mdp.states[s]] = std::move(update_by_mem);
            }
            entry["next"] = std::move(next);
            entry["update"] = std::move(update);
        }
        agents.push_back(std::move(entry));
    }
    return json{{"agents", std::move(agents)}};
}

void save_profile(const Profile& pi, const Mdp& mdp, const std::string& path) {
    save_json_file(profile_to_json(pi, mdp), path);
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error("malformed JSON in '" + path + "': " + e.what());
    }
    return j;
}

void save_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file '" + path + "'");
    out << j.dump(2) << "\n";
}

} // namespace mssp
