#include "mssp/memory_lift.hpp"

#include <algorithm>

namespace mssp {

LiftedMdp lift_mdp(const Mdp& mdp, int mem_size, std::int64_t cap) {
    if (mem_size < 1) throw Error("memory size must be at least 1");
    std::vector<std::string> names;
    names.reserve(mem_size);
    for (int m = 0; m < mem_size; ++m) names.push_back(std::to_string(m));
    return lift_mdp(mdp, names, cap);
}

LiftedMdp lift_mdp(const Mdp& mdp, const std::vector<std::string>& mem_names,
                   std::int64_t cap) {
    if (mem_names.empty()) throw Error("memory set is empty");
    const int n = mdp.num_states();
    const int na = mdp.num_actions();
    const int nm = static_cast<int>(mem_names.size());
    if (static_cast<std::int64_t>(n) * nm > cap) {
        throw Error("lifted MDP too large: |S|*|Mem| exceeds the cap of " +
                    std::to_string(cap) + " states");
    }

    LiftedMdp lifted;
    lifted.mem = mem_names;
    lifted.base_states = n;
    lifted.base_actions = na;
    lifted.mdp.states.reserve(static_cast<std::size_t>(n) * nm);
    for (int s = 0; s < n; ++s) {
        for (int m = 0; m < nm; ++m) {
            lifted.mdp.states.push_back(mdp.states[s] + "@" + mem_names[m]);
        }
    }
    lifted.mdp.actions.reserve(static_cast<std::size_t>(na) * nm);
    for (int a = 0; a < na; ++a) {
        for (int m = 0; m < nm; ++m) {
            lifted.mdp.actions.push_back(mdp.actions[a] + "@" + mem_names[m]);
        }
    }
    lifted.mdp.init_table();
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) {
            for (const auto& tr : mdp.trans[s][a]) {
                for (int m = 0; m < nm; ++m) {
                    for (int m2 = 0; m2 < nm; ++m2) {
                        lifted.mdp.trans[lifted.lifted_state(s, m)]
                                        [lifted.lifted_action(a, m2)]
                            .push_back({lifted.lifted_state(tr.to, m2), tr.prob});
                    }
                }
            }
        }
    }
    return lifted;
}

MemorylessStrategy lift_strategy(const FiniteMemoryStrategy& sigma,
                                 const LiftedMdp& lifted) {
    if (sigma.mem != lifted.mem) {
        throw Error("strategy memory set does not match the lifted MDP");
    }
    const int n = lifted.base_states;
    const int nm = lifted.num_mem();
    MemorylessStrategy lifted_sigma;
    lifted_sigma.decision.resize(static_cast<std::size_t>(n) * nm);
    for (int s = 0; s < n; ++s) {
        std::vector<int> enabled;
        for (int a = 0; a < lifted.base_actions; ++a) {
            if (!lifted.mdp.trans[lifted.lifted_state(s, 0)]
                                 [lifted.lifted_action(a, 0)]
                     .empty()) {
                enabled.push_back(a);
            }
        }
        for (int m = 0; m < nm; ++m) {
            auto& decision = lifted_sigma.decision[lifted.lifted_state(s, m)];
            for (const auto& ap : sigma.next[s][m]) {
                auto it = std::find(enabled.begin(), enabled.end(), ap.action);
                std::size_t ei = static_cast<std::size_t>(it - enabled.begin());
                for (const auto& mp : sigma.update[s][m][ei]) {
                    double p = ap.prob * mp.prob;
                    if (p > 0.0) {
                        decision.push_back({lifted.lifted_action(ap.action, mp.mem), p});
                    }
                }
            }
        }
    }
    return lifted_sigma;
}

FiniteMemoryStrategy lower_strategy(const MemorylessStrategy& sigma_bar,
                                    const LiftedMdp& lifted) {
    const int n = lifted.base_states;
    const int nm = lifted.num_mem();
    if (static_cast<int>(sigma_bar.decision.size()) != n * nm) {
        throw Error("strategy does not cover every lifted state");
    }
    FiniteMemoryStrategy sigma;
    sigma.mem = lifted.mem;
    sigma.init_mem = 0;
    sigma.next.assign(n, std::vector<std::vector<ActionProb>>(nm));
    sigma.update.assign(n, std::vector<std::vector<std::vector<MemProb>>>(nm));

    for (int s = 0; s < n; ++s) {
        std::vector<int> enabled;
        for (int a = 0; a < lifted.base_actions; ++a) {
            if (!lifted.mdp.trans[lifted.lifted_state(s, 0)]
                                 [lifted.lifted_action(a, 0)]
                     .empty()) {
                enabled.push_back(a);
            }
        }
        for (int m = 0; m < nm; ++m) {
            std::vector<double> marginal(lifted.base_actions, 0.0);
            std::vector<std::vector<double>> joint(
                lifted.base_actions, std::vector<double>(nm, 0.0));
            for (const auto& ap : sigma_bar.decision[lifted.lifted_state(s, m)]) {
                auto [a, m2] = lifted.original_action(ap.action);
                marginal[a] += ap.prob;
                joint[a][m2] += ap.prob;
            }
            auto& next = sigma.next[s][m];
            auto& update = sigma.update[s][m];
            update.resize(enabled.size());
            for (std::size_t ei = 0; ei < enabled.size(); ++ei) {
                int a = enabled[ei];
                if (marginal[a] > 0.0) {
                    next.push_back({a, marginal[a]});
                    for (int m2 = 0; m2 < nm; ++m2) {
                        if (joint[a][m2] > 0.0) {
                            update[ei].push_back({m2, joint[a][m2] / marginal[a]});
                        }
                    }
                } else {
                    // Never-played action: the memory update is arbitrary.
                    for (int m2 = 0; m2 < nm; ++m2) {
                        update[ei].push_back({m2, 1.0 / nm});
                    }
                }
            }
        }
    }
    return sigma;
}

MsspInstance lift_instance(const MsspInstance& instance, const LiftedMdp& lifted,
                           const std::vector<int>& init_mem) {
    if (static_cast<int>(init_mem.size()) != instance.num_agents()) {
        throw Error("one initial memory state per agent is required");
    }
    MsspInstance out;
    out.mdp = lifted.mdp;
    for (int i = 0; i < instance.num_agents(); ++i) {
        AgentTask task;
        task.init = lifted.lifted_state(instance.agents[i].init, init_mem[i]);
        for (int t : instance.agents[i].targets) {
            for (int m = 0; m < lifted.num_mem(); ++m) {
                task.targets.push_back(lifted.lifted_state(t, m));
            }
        }
        std::sort(task.targets.begin(), task.targets.end());
        out.agents.push_back(std::move(task));
    }
    return out;
}

} // namespace mssp
