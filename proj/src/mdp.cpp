#include "mssp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace mssp {

namespace {

int find_name(const std::vector<std::string>& names, const std::string& name,
              const char* kind) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) {
        throw Error(std::string("unknown ") + kind + " '" + name + "'");
    }
    return static_cast<int>(it - names.begin());
}

} // namespace

int Mdp::state_index(const std::string& name) const {
    return find_name(states, name, "state");
}

int Mdp::action_index(const std::string& name) const {
    return find_name(actions, name, "action");
}

std::vector<int> Mdp::enabled(int s) const {
    std::vector<int> acts;
    for (int a = 0; a < num_actions(); ++a) {
        if (!trans[s][a].empty()) acts.push_back(a);
    }
    return acts;
}

void Mdp::init_table() {
    trans.assign(states.size(), std::vector<std::vector<Transition>>(actions.size()));
}

void Mdp::add(int from, int action, int to, double prob) {
    for (auto& tr : trans[from][action]) {
        if (tr.to == to) {
            throw Error("duplicate transition (" + states[from] + ", " +
                        actions[action] + ", " + states[to] + ")");
        }
    }
    trans[from][action].push_back({to, prob});
}

void Mdp::add(const std::string& from, const std::string& action,
              const std::string& to, double prob) {
    add(state_index(from), action_index(action), state_index(to), prob);
}

MemorylessStrategy MemorylessStrategy::deterministic(const std::vector<int>& choice) {
    MemorylessStrategy sigma;
    sigma.decision.resize(choice.size());
    for (std::size_t s = 0; s < choice.size(); ++s) {
        sigma.decision[s] = {{choice[s], 1.0}};
    }
    return sigma;
}

double MemorylessStrategy::prob(int s, int a) const {
    for (const auto& ap : decision[s]) {
        if (ap.action == a) return ap.prob;
    }
    return 0.0;
}

bool MemorylessStrategy::is_deterministic() const {
    for (std::size_t s = 0; s < decision.size(); ++s) {
        if (dirac_action(static_cast<int>(s)) < 0) return false;
    }
    return true;
}

int MemorylessStrategy::dirac_action(int s) const {
    for (const auto& ap : decision[s]) {
        if (ap.prob > 1.0 - kProbTol) return ap.action;
    }
    return -1;
}

bool Profile::is_memoryless() const {
    for (const auto& sigma : strategies) {
        if (!std::holds_alternative<MemorylessStrategy>(sigma)) return false;
    }
    return true;
}

const MemorylessStrategy& Profile::memoryless(int i) const {
    const auto* sigma = std::get_if<MemorylessStrategy>(&strategies[i]);
    if (sigma == nullptr) {
        throw Error("agent " + std::to_string(i) +
                    " uses a finite-memory strategy where a memoryless one is required");
    }
    return *sigma;
}

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    if (mdp.states.empty()) report.issues.push_back("state set is empty");
    if (mdp.actions.empty()) report.issues.push_back("action set is empty");
    for (int s = 0; s < mdp.num_states(); ++s) {
        bool any_enabled = false;
        for (int a = 0; a < mdp.num_actions(); ++a) {
            const auto& support = mdp.trans[s][a];
            if (support.empty()) continue;
            any_enabled = true;
            double sum = 0.0;
            for (const auto& tr : support) {
                if (tr.prob < 0.0 || tr.prob > 1.0) {
                    std::ostringstream os;
                    os << "mass " << tr.prob << " outside [0,1] on ("
                       << mdp.states[s] << ", " << mdp.actions[a] << ", "
                       << mdp.states[tr.to] << ")";
                    report.issues.push_back(os.str());
                }
                sum += tr.prob;
            }
            if (std::abs(sum - 1.0) > kProbTol) {
                std::ostringstream os;
                os << "row sum " << sum << " for (" << mdp.states[s] << ", "
                   << mdp.actions[a] << ") is not 1 within 1e-9";
                report.issues.push_back(os.str());
            }
        }
        if (!any_enabled) {
            report.issues.push_back("state " + mdp.states[s] + " has no enabled action");
        }
    }
    return report;
}

ValidationReport validate_instance(const MsspInstance& instance) {
    ValidationReport report = validate_mdp(instance.mdp);
    if (instance.agents.empty()) {
        report.issues.push_back("instance has no agents (k >= 1 required)");
    }
    for (int i = 0; i < instance.num_agents(); ++i) {
        const auto& agent = instance.agents[i];
        if (agent.targets.empty()) {
            report.issues.push_back("agent " + std::to_string(i) + " has an empty target set");
            continue;
        }
        if (std::find(agent.targets.begin(), agent.targets.end(), agent.init) !=
            agent.targets.end()) {
            report.issues.push_back("agent " + std::to_string(i) + " starts in its target set");
        }
    }
    return report;
}

ValidationReport validate_strategy(const Mdp& mdp, const MemorylessStrategy& sigma) {
    ValidationReport report;
    if (static_cast<int>(sigma.decision.size()) != mdp.num_states()) {
        report.issues.push_back("strategy does not cover every state");
        return report;
    }
    for (int s = 0; s < mdp.num_states(); ++s) {
        double sum = 0.0;
        for (const auto& ap : sigma.decision[s]) {
            if (ap.action < 0 || ap.action >= mdp.num_actions() ||
                !mdp.is_enabled(s, ap.action)) {
                report.issues.push_back("strategy plays a disabled action in state " +
                                        mdp.states[s]);
            }
            if (ap.prob < 0.0 || ap.prob > 1.0) {
                report.issues.push_back("strategy mass outside [0,1] in state " +
                                        mdp.states[s]);
            }
            sum += ap.prob;
        }
        if (std::abs(sum - 1.0) > kProbTol) {
            report.issues.push_back("strategy distribution in state " + mdp.states[s] +
                                    " does not sum to 1 within 1e-9");
        }
    }
    return report;
}

ValidationReport validate_strategy(const Mdp& mdp, const FiniteMemoryStrategy& sigma) {
    ValidationReport report;
    const int n = sigma.num_mem();
    if (n == 0) {
        report.issues.push_back("memory set is empty");
        return report;
    }
    if (sigma.init_mem < 0 || sigma.init_mem >= n) {
        report.issues.push_back("initial memory state out of range");
    }
    if (static_cast<int>(sigma.next.size()) != mdp.num_states() ||
        static_cast<int>(sigma.update.size()) != mdp.num_states()) {
        report.issues.push_back("strategy does not cover every state");
        return report;
    }
    for (int s = 0; s < mdp.num_states(); ++s) {
        const auto en = mdp.enabled(s);
        if (static_cast<int>(sigma.next[s].size()) != n ||
            static_cast<int>(sigma.update[s].size()) != n) {
            report.issues.push_back("strategy does not cover every memory state of " +
                                    mdp.states[s]);
            continue;
        }
        for (int m = 0; m < n; ++m) {
            double sum = 0.0;
            for (const auto& ap : sigma.next[s][m]) {
                if (ap.action < 0 || ap.action >= mdp.num_actions() ||
                    !mdp.is_enabled(s, ap.action)) {
                    report.issues.push_back("strategy plays a disabled action in state " +
                                            mdp.states[s]);
                }
                sum += ap.prob;
            }
            if (std::abs(sum - 1.0) > kProbTol) {
                report.issues.push_back("next distribution at (" + mdp.states[s] + ", " +
                                        sigma.mem[m] + ") does not sum to 1 within 1e-9");
            }
            if (static_cast<int>(sigma.update[s][m].size()) != static_cast<int>(en.size())) {
                report.issues.push_back("update table at (" + mdp.states[s] + ", " +
                                        sigma.mem[m] + ") does not cover every enabled action");
                continue;
            }
            for (std::size_t ei = 0; ei < en.size(); ++ei) {
                double usum = 0.0;
                for (const auto& mp : sigma.update[s][m][ei]) {
                    if (mp.mem < 0 || mp.mem >= n) {
                        report.issues.push_back("update targets an unknown memory state");
                    }
                    usum += mp.prob;
                }
                if (std::abs(usum - 1.0) > kProbTol) {
                    report.issues.push_back("update distribution at (" + mdp.states[s] +
                                            ", " + sigma.mem[m] + ", " +
                                            mdp.actions[en[ei]] +
                                            ") does not sum to 1 within 1e-9");
                }
            }
        }
    }
    return report;
}

ValidationReport validate_profile(const MsspInstance& instance, const Profile& pi) {
    ValidationReport report;
    if (pi.num_agents() != instance.num_agents()) {
        report.issues.push_back("profile length does not match the instance's agent count");
        return report;
    }
    for (const auto& sigma : pi.strategies) {
        ValidationReport sub = std::visit(
            [&](const auto& s) { return validate_strategy(instance.mdp, s); }, sigma);
        for (auto& issue : sub.issues) report.issues.push_back(std::move(issue));
    }
    return report;
}

namespace {

void require_valid(const ValidationReport& report) {
    if (!report.ok()) throw Error(report.issues.front());
}

} // namespace

MarkovChain induced_chain(const Mdp& mdp, const MemorylessStrategy& sigma) {
    require_valid(validate_strategy(mdp, sigma));
    const int n = mdp.num_states();
    MarkovChain chain;
    chain.states = mdp.states;
    chain.matrix = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (const auto& ap : sigma.decision[s]) {
            for (const auto& tr : mdp.trans[s][ap.action]) {
                chain.matrix(s, tr.to) += ap.prob * tr.prob;
            }
        }
    }
    return chain;
}

MarkovChain induced_chain(const Mdp& mdp, const FiniteMemoryStrategy& sigma) {
    require_valid(validate_strategy(mdp, sigma));
    const int n = mdp.num_states();
    const int m = sigma.num_mem();
    MarkovChain chain;
    chain.states.reserve(static_cast<std::size_t>(n) * m);
    for (int s = 0; s < n; ++s) {
        for (int j = 0; j < m; ++j) {
            chain.states.push_back(mdp.states[s] + "@" + sigma.mem[j]);
        }
    }
    chain.matrix = Eigen::MatrixXd::Zero(n * m, n * m);
    for (int s = 0; s < n; ++s) {
        const auto en = mdp.enabled(s);
        for (int j = 0; j < m; ++j) {
            for (const auto& ap : sigma.next[s][j]) {
                const auto ei = std::find(en.begin(), en.end(), ap.action) - en.begin();
                for (const auto& mp : sigma.update[s][j][ei]) {
                    for (const auto& tr : mdp.trans[s][ap.action]) {
                        chain.matrix(s * m + j, tr.to * m + mp.mem) +=
                            ap.prob * tr.prob * mp.prob;
                    }
                }
            }
        }
    }
    return chain;
}

std::vector<int> reachable(const Mdp& mdp, int from) {
    if (from < 0 || from >= mdp.num_states()) {
        throw Error("unknown state index " + std::to_string(from));
    }
    std::vector<char> seen(mdp.states.size(), 0);
    std::deque<int> queue{from};
    seen[from] = 1;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int a = 0; a < mdp.num_actions(); ++a) {
            for (const auto& tr : mdp.trans[s][a]) {
                if (tr.prob > 0.0 && !seen[tr.to]) {
                    seen[tr.to] = 1;
                    queue.push_back(tr.to);
                }
            }
        }
    }
    std::vector<int> result;
    for (int s = 0; s < mdp.num_states(); ++s) {
        if (seen[s]) result.push_back(s);
    }
    return result;
}

MemorylessStrategy uniform_strategy(const Mdp& mdp) {
    MemorylessStrategy sigma;
    sigma.decision.resize(mdp.states.size());
    for (int s = 0; s < mdp.num_states(); ++s) {
        const auto en = mdp.enabled(s);
        for (int a : en) {
            sigma.decision[s].push_back({a, 1.0 / static_cast<double>(en.size())});
        }
    }
    return sigma;
}

} // namespace mssp
