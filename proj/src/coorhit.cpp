#include "mssp/coorhit.hpp"

#include "mssp/detail/ssp_solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace mssp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// |S|^k with overflow protection against the cap.
std::int64_t checked_pow(std::int64_t base, int exp, std::int64_t cap) {
    std::int64_t result = 1;
    for (int i = 0; i < exp; ++i) {
        if (result > cap / base) return cap + 1;
        result *= base;
    }
    return result;
}

std::string join_names(const std::vector<std::string>& names,
                       const std::vector<int>& tuple) {
    std::string out;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
        if (i > 0) out += '|';
        out += names[tuple[i]];
    }
    return out;
}

std::vector<int> split_names(const std::vector<std::string>& names,
                             const std::string& joined, const char* kind) {
    std::vector<int> tuple;
    std::stringstream ss(joined);
    std::string part;
    while (std::getline(ss, part, '|')) {
        auto it = std::find(names.begin(), names.end(), part);
        if (it == names.end()) {
            throw Error(std::string("unknown ") + kind + " '" + part + "'");
        }
        tuple.push_back(static_cast<int>(it - names.begin()));
    }
    return tuple;
}

void require_valid_instance(const MsspInstance& instance) {
    ValidationReport report = validate_instance(instance);
    if (!report.ok()) throw Error(report.issues.front());
}

} // namespace

std::int64_t product_cap_from_env() {
    const char* env = std::getenv("MSSP_PRODUCT_CAP");
    if (env == nullptr || *env == '\0') return kDefaultProductCap;
    char* end = nullptr;
    long long value = std::strtoll(env, &end, 10);
    if (end == nullptr || *end != '\0' || value <= 0) {
        throw Error("MSSP_PRODUCT_CAP must be a positive integer");
    }
    return static_cast<std::int64_t>(value);
}

std::vector<int> ProductInstance::tuple_of(int flat) const {
    std::vector<int> tuple(agents);
    for (int i = agents - 1; i >= 0; --i) {
        tuple[i] = flat % base_states;
        flat /= base_states;
    }
    return tuple;
}

int ProductInstance::flat_of(const std::vector<int>& tuple) const {
    int flat = 0;
    for (int i = 0; i < agents; ++i) flat = flat * base_states + tuple[i];
    return flat;
}

ProductInstance build_product(const MsspInstance& instance, std::int64_t cap) {
    require_valid_instance(instance);
    const Mdp& mdp = instance.mdp;
    const int k = instance.num_agents();
    const int n = mdp.num_states();
    const int na = mdp.num_actions();

    std::int64_t product_states = checked_pow(n, k, cap);
    if (product_states > cap) {
        throw Error("product too large: |S|^k exceeds the cap of " +
                    std::to_string(cap) + " states");
    }
    std::int64_t product_actions = checked_pow(na, k, cap);
    if (product_states * product_actions > 100000000) {
        throw Error("product too large: the explicit state-action table "
                    "would exceed memory limits");
    }

    ProductInstance product;
    product.base_states = n;
    product.agents = k;
    product.mdp.states.reserve(product_states);
    std::vector<int> tuple(k, 0);
    for (std::int64_t flat = 0; flat < product_states; ++flat) {
        product.mdp.states.push_back(join_names(mdp.states, tuple));
        for (int i = k - 1; i >= 0; --i) {
            if (++tuple[i] < n) break;
            tuple[i] = 0;
        }
    }
    std::vector<int> atuple(k, 0);
    for (std::int64_t flat = 0; flat < product_actions; ++flat) {
        product.mdp.actions.push_back(join_names(mdp.actions, atuple));
        for (int i = k - 1; i >= 0; --i) {
            if (++atuple[i] < na) break;
            atuple[i] = 0;
        }
    }
    product.mdp.init_table();

    std::vector<std::vector<char>> target_mask(k, std::vector<char>(n, 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target_mask[i][t] = 1;
    }
    product.target.assign(product_states, 0);

    std::vector<int> stuple(k, 0);
    for (std::int64_t flat = 0; flat < product_states; ++flat) {
        for (int i = 0; i < k; ++i) {
            if (target_mask[i][stuple[i]]) {
                product.target[flat] = 1;
                break;
            }
        }
        for (std::int64_t aflat = 0; aflat < product_actions; ++aflat) {
            std::vector<int> acts(k);
            std::int64_t rem = aflat;
            bool enabled = true;
            for (int i = k - 1; i >= 0; --i) {
                acts[i] = static_cast<int>(rem % na);
                rem /= na;
                if (!mdp.is_enabled(stuple[i], acts[i])) enabled = false;
            }
            if (!enabled) continue;
            // Cartesian product of the component supports.
            std::vector<int> succ(k);
            auto recurse = [&](auto&& self, int agent, double p) -> void {
                if (agent == k) {
                    int to = 0;
                    for (int i = 0; i < k; ++i) to = to * n + succ[i];
                    product.mdp.trans[flat][aflat].push_back({to, p});
                    return;
                }
                for (const auto& tr : mdp.trans[stuple[agent]][acts[agent]]) {
                    succ[agent] = tr.to;
                    self(self, agent + 1, p * tr.prob);
                }
            };
            recurse(recurse, 0, 1.0);
        }
        for (int i = k - 1; i >= 0; --i) {
            if (++stuple[i] < n) break;
            stuple[i] = 0;
        }
    }

    std::vector<int> init_tuple(k);
    for (int i = 0; i < k; ++i) init_tuple[i] = instance.agents[i].init;
    product.init = product.flat_of(init_tuple);
    return product;
}

namespace {

/// Lazily enumerated product restricted to the tuples reachable from the
/// start; target tuples are absorbing leaves with a single dummy self-loop.
struct ProductView {
    const Mdp& mdp;
    int k;
    std::vector<std::vector<int>> enabled_base;
    std::vector<std::vector<char>> target_mask;
    std::vector<std::vector<int>> tuples;
    std::vector<char> target;
    std::vector<std::int64_t> keys;
    std::unordered_map<std::int64_t, int> id_of;

    ProductView(const MsspInstance& instance, std::int64_t cap)
        : mdp(instance.mdp), k(instance.num_agents()) {
        const int n = mdp.num_states();
        if (checked_pow(n, k, cap) > cap) {
            throw Error("product too large: |S|^k exceeds the cap of " +
                        std::to_string(cap) + " states");
        }
        enabled_base.reserve(n);
        for (int s = 0; s < n; ++s) enabled_base.push_back(mdp.enabled(s));
        target_mask.assign(k, std::vector<char>(n, 0));
        for (int i = 0; i < k; ++i) {
            for (int t : instance.agents[i].targets) target_mask[i][t] = 1;
        }

        std::vector<int> init_tuple(k);
        for (int i = 0; i < k; ++i) init_tuple[i] = instance.agents[i].init;
        intern(init_tuple);
        std::deque<int> queue{0};
        while (!queue.empty()) {
            int id = queue.front();
            queue.pop_front();
            if (target[id]) continue;
            const std::vector<int> tuple = tuples[id];
            std::size_t before = tuples.size();
            for (int c = 0; c < num_choices(id); ++c) {
                std::vector<int> acts = decode_choice(tuple, c);
                std::vector<int> succ(k);
                auto recurse = [&](auto&& self, int agent) -> void {
                    if (agent == k) {
                        intern(succ);
                        return;
                    }
                    for (const auto& tr : mdp.trans[tuple[agent]][acts[agent]]) {
                        succ[agent] = tr.to;
                        self(self, agent + 1);
                    }
                };
                recurse(recurse, 0);
            }
            for (std::size_t fresh = before; fresh < tuples.size(); ++fresh) {
                queue.push_back(static_cast<int>(fresh));
            }
        }
    }

    std::int64_t key_of(const std::vector<int>& tuple) const {
        std::int64_t key = 0;
        for (int i = 0; i < k; ++i) key = key * mdp.num_states() + tuple[i];
        return key;
    }

    int intern(const std::vector<int>& tuple) {
        auto [it, inserted] = id_of.try_emplace(key_of(tuple),
                                                static_cast<int>(tuples.size()));
        if (inserted) {
            tuples.push_back(tuple);
            keys.push_back(key_of(tuple));
            char is_target = 0;
            for (int i = 0; i < k; ++i) {
                if (target_mask[i][tuple[i]]) {
                    is_target = 1;
                    break;
                }
            }
            target.push_back(is_target);
        }
        return it->second;
    }

    std::vector<int> decode_choice(const std::vector<int>& tuple, int c) const {
        std::vector<int> acts(k);
        for (int i = k - 1; i >= 0; --i) {
            const auto& en = enabled_base[tuple[i]];
            acts[i] = en[c % static_cast<int>(en.size())];
            c /= static_cast<int>(en.size());
        }
        return acts;
    }

    int num_states() const { return static_cast<int>(tuples.size()); }

    int num_choices(int s) const {
        if (target[s]) return 1;
        int count = 1;
        for (int i = 0; i < k; ++i) {
            count *= static_cast<int>(enabled_base[tuples[s][i]].size());
        }
        return count;
    }

    template <class F>
    void for_successors(int s, int c, F&& f) const {
        if (target[s]) {
            f(s, 1.0);
            return;
        }
        const std::vector<int>& tuple = tuples[s];
        std::vector<int> acts = decode_choice(tuple, c);
        std::vector<int> succ(k);
        auto recurse = [&](auto&& self, int agent, double p) -> void {
            if (agent == k) {
                f(id_of.at(key_of(succ)), p);
                return;
            }
            for (const auto& tr : mdp.trans[tuple[agent]][acts[agent]]) {
                succ[agent] = tr.to;
                self(self, agent + 1, p * tr.prob);
            }
        };
        recurse(recurse, 0, 1.0);
    }
};

} // namespace

CoordResult solve_coordinated(const MsspInstance& instance, std::int64_t cap) {
    require_valid_instance(instance);
    ProductView view(instance, cap);
    auto solved = detail::solve_ssp_impl(view, view.target);

    CoordResult result;
    result.status = solved.core.in_core[0] ? Finiteness::Finite : Finiteness::Infinite;
    result.value = solved.core.in_core[0] ? solved.values[0] : kInf;
    for (int s = 0; s < view.num_states(); ++s) {
        if (!solved.core.in_core[s] || view.target[s] || solved.policy[s] < 0) continue;
        result.strategy.decision[view.tuples[s]] =
            view.decode_choice(view.tuples[s], solved.policy[s]);
    }
    return result;
}

double coord_value(const MsspInstance& instance, const CoordStrategy& cs) {
    require_valid_instance(instance);
    const Mdp& mdp = instance.mdp;
    const int k = instance.num_agents();
    std::vector<std::vector<char>> target_mask(k,
                                               std::vector<char>(mdp.num_states(), 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target_mask[i][t] = 1;
    }
    auto is_target = [&](const std::vector<int>& tuple) {
        for (int i = 0; i < k; ++i) {
            if (target_mask[i][tuple[i]]) return true;
        }
        return false;
    };

    // Chain induced by the strategy on the tuples it reaches.
    std::map<std::vector<int>, int> id_of;
    std::vector<std::vector<int>> tuples;
    std::vector<char> absorbed;
    std::vector<std::vector<std::pair<int, double>>> adj;
    auto intern = [&](const std::vector<int>& tuple) {
        auto [it, inserted] = id_of.try_emplace(tuple, static_cast<int>(tuples.size()));
        if (inserted) {
            tuples.push_back(tuple);
            absorbed.push_back(is_target(tuple) ? 1 : 0);
        }
        return it->second;
    };

    std::vector<int> init_tuple(k);
    for (int i = 0; i < k; ++i) init_tuple[i] = instance.agents[i].init;
    intern(init_tuple);
    std::deque<int> queue{0};
    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        if (absorbed[id]) continue;
        const std::vector<int> tuple = tuples[id];
        auto it = cs.decision.find(tuple);
        if (it == cs.decision.end()) {
            throw Error("coordinated strategy is undefined on the reachable tuple " +
                        join_names(mdp.states, tuple));
        }
        const std::vector<int>& acts = it->second;
        if (static_cast<int>(acts.size()) != k) {
            throw Error("coordinated decision has the wrong number of components");
        }
        for (int i = 0; i < k; ++i) {
            if (!mdp.is_enabled(tuple[i], acts[i])) {
                throw Error("coordinated strategy plays the disabled action " +
                            mdp.actions[acts[i]] + " in state " + mdp.states[tuple[i]]);
            }
        }
        std::vector<int> succ(k);
        std::vector<std::pair<int, double>> row;
        auto recurse = [&](auto&& self, int agent, double p) -> void {
            if (agent == k) {
                row.push_back({intern(succ), p});
                return;
            }
            for (const auto& tr : mdp.trans[tuple[agent]][acts[agent]]) {
                succ[agent] = tr.to;
                self(self, agent + 1, p * tr.prob);
            }
        };
        std::size_t before = tuples.size();
        recurse(recurse, 0, 1.0);
        for (std::size_t fresh = before; fresh < tuples.size(); ++fresh) {
            queue.push_back(static_cast<int>(fresh));
        }
        adj.resize(std::max(adj.size(), tuples.size()));
        std::sort(row.begin(), row.end());
        std::vector<std::pair<int, double>> merged;
        for (const auto& [to, p] : row) {
            if (!merged.empty() && merged.back().first == to) {
                merged.back().second += p;
            } else {
                merged.push_back({to, p});
            }
        }
        adj[id] = std::move(merged);
    }
    adj.resize(tuples.size());

    const int n = static_cast<int>(tuples.size());
    std::vector<std::vector<int>> rev(n);
    for (int s = 0; s < n; ++s) {
        for (const auto& [t, p] : adj[s]) rev[t].push_back(s);
    }
    std::vector<char> reaches(n, 0);
    std::deque<int> back;
    for (int s = 0; s < n; ++s) {
        if (absorbed[s]) {
            reaches[s] = 1;
            back.push_back(s);
        }
    }
    while (!back.empty()) {
        int t = back.front();
        back.pop_front();
        for (int s : rev[t]) {
            if (!reaches[s]) {
                reaches[s] = 1;
                back.push_back(s);
            }
        }
    }
    for (int s = 0; s < n; ++s) {
        if (!reaches[s]) return kInf;
    }

    std::vector<int> unknown_id(n, -1);
    std::vector<int> unknown_states;
    for (int s = 0; s < n; ++s) {
        if (!absorbed[s]) {
            unknown_id[s] = static_cast<int>(unknown_states.size());
            unknown_states.push_back(s);
        }
    }
    const int m = static_cast<int>(unknown_states.size());
    if (m == 0) return 0.0;

    Eigen::VectorXd y(m);
    if (m <= detail::kDenseLimit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
        for (int row = 0; row < m; ++row) {
            for (const auto& [t, p] : adj[unknown_states[row]]) {
                if (unknown_id[t] >= 0) a(row, unknown_id[t]) -= p;
            }
        }
        y = a.partialPivLu().solve(Eigen::VectorXd::Ones(m));
    } else {
        std::vector<Eigen::Triplet<double>> triplets;
        for (int row = 0; row < m; ++row) {
            int s = unknown_states[row];
            double diag = 1.0;
            for (const auto& [t, p] : adj[s]) {
                if (t == s) {
                    diag -= p;
                } else if (unknown_id[t] >= 0) {
                    triplets.emplace_back(row, unknown_id[t], -p);
                }
            }
            triplets.emplace_back(row, row, diag);
        }
        Eigen::SparseMatrix<double> a(m, m);
        a.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success) {
            throw Error("coordinated hitting-time system is singular");
        }
        y = lu.solve(Eigen::VectorXd::Ones(m));
    }
    return y(unknown_id[id_of.at(init_tuple)]);
}

CoordStrategy embed_profile(const MsspInstance& instance, const Profile& pi) {
    require_valid_instance(instance);
    if (pi.num_agents() != instance.num_agents()) {
        throw Error("profile length does not match the instance's agent count");
    }
    const int k = instance.num_agents();
    std::vector<std::vector<int>> choice(k);
    for (int i = 0; i < k; ++i) {
        const MemorylessStrategy& sigma = pi.memoryless(i);
        choice[i].resize(instance.mdp.num_states());
        for (int s = 0; s < instance.mdp.num_states(); ++s) {
            int a = sigma.dirac_action(s);
            if (a < 0) {
                throw Error("embedding requires a deterministic memoryless profile");
            }
            choice[i][s] = a;
        }
    }

    std::vector<std::vector<char>> target_mask(k,
                                               std::vector<char>(instance.mdp.num_states(), 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target_mask[i][t] = 1;
    }

    CoordStrategy cs;
    std::vector<int> init_tuple(k);
    for (int i = 0; i < k; ++i) init_tuple[i] = instance.agents[i].init;
    std::deque<std::vector<int>> queue{init_tuple};
    std::map<std::vector<int>, char> seen{{init_tuple, 1}};
    while (!queue.empty()) {
        std::vector<int> tuple = queue.front();
        queue.pop_front();
        bool absorbed = false;
        for (int i = 0; i < k; ++i) {
            if (target_mask[i][tuple[i]]) absorbed = true;
        }
        if (absorbed) continue;
        std::vector<int> acts(k);
        for (int i = 0; i < k; ++i) acts[i] = choice[i][tuple[i]];
        cs.decision[tuple] = acts;
        std::vector<int> succ(k);
        auto recurse = [&](auto&& self, int agent) -> void {
            if (agent == k) {
                if (seen.try_emplace(succ, 1).second) queue.push_back(succ);
                return;
            }
            for (const auto& tr : instance.mdp.trans[tuple[agent]][acts[agent]]) {
                succ[agent] = tr.to;
                self(self, agent + 1);
            }
        };
        recurse(recurse, 0);
    }
    return cs;
}

nlohmann::json coord_strategy_to_json(const CoordStrategy& cs, const Mdp& mdp) {
    nlohmann::json decision = nlohmann::json::object();
    for (const auto& [tuple, acts] : cs.decision) {
        decision[join_names(mdp.states, tuple)] = join_names(mdp.actions, acts);
    }
    return nlohmann::json{{"decision", decision}};
}

CoordStrategy coord_strategy_from_json(const nlohmann::json& j, const Mdp& mdp) {
    CoordStrategy cs;
    if (!j.contains("decision")) {
        throw Error("coordinated strategy is missing the 'decision' field");
    }
    for (const auto& [state, action] : j.at("decision").items()) {
        cs.decision[split_names(mdp.states, state, "state")] =
            split_names(mdp.actions, action.get<std::string>(), "action");
    }
    return cs;
}

} // namespace mssp
