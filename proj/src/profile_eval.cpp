#include "mssp/profile_eval.hpp"

#include "mssp/ssp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

namespace mssp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_memoryless(const Profile& pi) {
    if (!pi.is_memoryless()) {
        throw Error("profile contains a finite-memory strategy; "
                    "lift it to a memoryless profile first");
    }
}

std::vector<AbsorbedChain> agent_chains(const MsspInstance& instance, const Profile& pi) {
    std::vector<AbsorbedChain> acs;
    acs.reserve(instance.agents.size());
    for (int i = 0; i < instance.num_agents(); ++i) {
        acs.push_back(build_abar(instance.mdp, pi.memoryless(i),
                                 instance.agents[i].targets));
    }
    return acs;
}

/// Incrementally extended hitting-CDF rows, one per agent.
struct CdfTable {
    std::vector<AbsorbedChain> acs;
    std::vector<Eigen::RowVectorXd> row;  // current power of the indicator row
    std::vector<std::vector<double>> cdf; // cdf[i][m] = Abar_i^m(iota_i, tau_i)

    CdfTable(const MsspInstance& instance, const Profile& pi)
        : acs(agent_chains(instance, pi)) {
        const int k = static_cast<int>(acs.size());
        row.resize(k);
        cdf.resize(k);
        for (int i = 0; i < k; ++i) {
            row[i] = Eigen::RowVectorXd::Zero(acs[i].chain.matrix.rows());
            row[i](instance.agents[i].init) = 1.0;
            cdf[i].push_back(row[i](acs[i].sink));
        }
    }

    void extend_to(int m) {
        for (std::size_t i = 0; i < acs.size(); ++i) {
            while (static_cast<int>(cdf[i].size()) <= m) {
                row[i] = row[i] * acs[i].chain.matrix;
                cdf[i].push_back(row[i](acs[i].sink));
            }
        }
    }

    /// sum_{l=1..gamma} prod_i (1 - cdf_i(l-1)), agents in fixed order.
    double truncated_sum(int gamma) {
        extend_to(gamma - 1);
        double total = 0.0;
        for (int l = 1; l <= gamma; ++l) {
            double term = 1.0;
            for (std::size_t i = 0; i < acs.size(); ++i) term *= 1.0 - cdf[i][l - 1];
            total += term;
        }
        return total;
    }
};

} // namespace

AbsorbedChain build_abar(const Mdp& mdp, const MemorylessStrategy& sigma,
                         const std::vector<int>& targets) {
    if (targets.empty()) throw Error("target set is empty");
    std::vector<int> sorted = targets;
    std::sort(sorted.begin(), sorted.end());

    AbsorbedChain ac;
    ac.chain = induced_chain(mdp, sigma);
    ac.sink = sorted.front();
    ac.target.assign(mdp.states.size(), 0);
    for (int t : sorted) ac.target[t] = 1;

    const int n = mdp.num_states();
    Eigen::MatrixXd& m = ac.chain.matrix;
    for (int s = 0; s < n; ++s) {
        if (ac.target[s]) {
            m.row(s).setZero();
            m(s, s) = 1.0;
            continue;
        }
        double to_targets = 0.0;
        for (int t = 0; t < n; ++t) {
            if (ac.target[t]) {
                to_targets += m(s, t);
                m(s, t) = 0.0;
            }
        }
        m(s, ac.sink) = to_targets;
    }
    return ac;
}

double hit_cdf(const AbsorbedChain& ac, int init, int ell) {
    if (ell < 0) throw Error("CDF step count must be nonnegative");
    return hit_cdf_prefix(ac, init, ell).back();
}

std::vector<double> hit_cdf_prefix(const AbsorbedChain& ac, int init, int len) {
    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(ac.chain.matrix.rows());
    v(init) = 1.0;
    std::vector<double> cdf;
    cdf.reserve(len + 1);
    cdf.push_back(v(ac.sink));
    for (int m = 1; m <= len; ++m) {
        v = v * ac.chain.matrix;
        cdf.push_back(v(ac.sink));
    }
    return cdf;
}

double truncated_mhit(const MsspInstance& instance, const Profile& pi, int gamma) {
    require_memoryless(pi);
    if (gamma < 1) throw Error("truncation length gamma must be at least 1");
    CdfTable table(instance, pi);
    return table.truncated_sum(gamma);
}

namespace {

struct BoundState {
    CdfTable table;
    std::vector<double> expectation;  // exact E[Hit_i], +inf when never a.s.
    std::vector<int> eligible;

    BoundState(const MsspInstance& instance, const Profile& pi)
        : table(instance, pi) {
        for (int i = 0; i < instance.num_agents(); ++i) {
            EvalResult er = eval_strategy(instance.mdp, pi.memoryless(i),
                                          instance.agents[i].init,
                                          instance.agents[i].targets);
            expectation.push_back(er.status == Finiteness::Finite ? er.value : kInf);
            if (er.status == Finiteness::Finite) eligible.push_back(i);
        }
    }

    /// min over eligible witnesses of the Eq-style tail bound at rho.
    std::pair<double, int> bound_at(int rho) {
        table.extend_to(rho);
        const int k = static_cast<int>(table.cdf.size());
        std::vector<double> survival(k);
        for (int i = 0; i < k; ++i) survival[i] = 1.0 - table.cdf[i][rho];
        std::vector<double> prefix(k + 1, 1.0), suffix(k + 1, 1.0);
        for (int i = 0; i < k; ++i) prefix[i + 1] = prefix[i] * survival[i];
        for (int i = k - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * survival[i];

        double best = kInf;
        int witness = -1;
        for (int i : eligible) {
            double partial = 0.0;
            for (int l = 1; l <= rho; ++l) partial += 1.0 - table.cdf[i][l - 1];
            double delta = std::max(expectation[i] - partial, 0.0);
            double others = prefix[i] * suffix[i + 1];
            double candidate = delta * others;
            if (candidate < best) {
                best = candidate;
                witness = i;
            }
        }
        return {best, witness};
    }
};

} // namespace

namespace {

/// Doubling then bisection for the least rho with bound(rho) <= eps.
TruncationBound search_gamma(BoundState& state, double eps) {
    int rho = 1;
    double bound = state.bound_at(rho).first;
    constexpr int kMaxRho = 1 << 28;
    while (bound > eps) {
        if (rho >= kMaxRho) {
            throw Error("truncation length search exceeded its limit");
        }
        rho *= 2;
        bound = state.bound_at(rho).first;
    }
    int lo = rho / 2;  // bound(lo) > eps whenever lo >= 1
    int hi = rho;
    while (lo + 1 < hi) {
        int mid = lo + (hi - lo) / 2;
        if (state.bound_at(mid).first <= eps) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    TruncationBound result;
    result.rho = hi;
    std::tie(result.bound, result.witness_agent) = state.bound_at(hi);
    return result;
}

} // namespace

TruncationBound gamma_eps(const MsspInstance& instance, const Profile& pi, double eps) {
    require_memoryless(pi);
    if (eps <= 0.0) throw Error("epsilon must be positive");
    BoundState state(instance, pi);
    if (state.eligible.empty()) {
        throw Error("value infinite or truncation bound inapplicable: "
                    "no agent has a finite expected hitting time");
    }
    return search_gamma(state, eps);
}

double evaluate(const MsspInstance& instance, const Profile& pi, double eps) {
    require_memoryless(pi);
    if (eps <= 0.0) throw Error("epsilon must be positive");
    BoundState state(instance, pi);
    if (state.eligible.empty()) return kInf;
    TruncationBound tb = search_gamma(state, eps);
    return state.table.truncated_sum(tb.rho);
}

namespace {

struct AgentChain {
    std::vector<std::vector<std::pair<int, double>>> rows;
    std::vector<char> target;
    int init = 0;
};

AgentChain make_agent_chain(const MsspInstance& instance, const Strategy& strategy,
                            const AgentTask& task) {
    AgentChain out;
    if (const auto* sigma = std::get_if<MemorylessStrategy>(&strategy)) {
        MarkovChain chain = induced_chain(instance.mdp, *sigma);
        const int n = static_cast<int>(chain.states.size());
        out.rows.resize(n);
        for (int s = 0; s < n; ++s) {
            for (int t = 0; t < n; ++t) {
                double p = chain.matrix(s, t);
                if (p > 0.0) out.rows[s].push_back({t, p});
            }
        }
        out.target.assign(n, 0);
        for (int t : task.targets) out.target[t] = 1;
        out.init = task.init;
    } else {
        const auto& fms = std::get<FiniteMemoryStrategy>(strategy);
        MarkovChain chain = induced_chain(instance.mdp, fms);
        const int nm = fms.num_mem();
        const int n = static_cast<int>(chain.states.size());
        out.rows.resize(n);
        for (int s = 0; s < n; ++s) {
            for (int t = 0; t < n; ++t) {
                double p = chain.matrix(s, t);
                if (p > 0.0) out.rows[s].push_back({t, p});
            }
        }
        out.target.assign(n, 0);
        for (int t : task.targets) {
            for (int m = 0; m < nm; ++m) out.target[t * nm + m] = 1;
        }
        out.init = task.init * nm + fms.init_mem;
    }
    return out;
}

} // namespace

double exact_mhit_product(const MsspInstance& instance, const Profile& pi,
                          std::int64_t cap) {
    if (pi.num_agents() != instance.num_agents()) {
        throw Error("profile length does not match the instance's agent count");
    }
    const int k = instance.num_agents();
    std::vector<AgentChain> chains;
    chains.reserve(k);
    std::int64_t product_size = 1;
    for (int i = 0; i < k; ++i) {
        chains.push_back(make_agent_chain(instance, pi.strategies[i], instance.agents[i]));
        std::int64_t n = static_cast<std::int64_t>(chains.back().rows.size());
        if (product_size > cap / n + 1) {
            throw Error("product chain exceeds the state cap of " + std::to_string(cap));
        }
        product_size *= n;
        if (product_size > cap) {
            throw Error("product chain exceeds the state cap of " + std::to_string(cap));
        }
    }

    std::vector<std::int64_t> stride(k);
    std::int64_t acc = 1;
    for (int i = k - 1; i >= 0; --i) {
        stride[i] = acc;
        acc *= static_cast<std::int64_t>(chains[i].rows.size());
    }

    auto is_target = [&](const std::vector<int>& tuple) {
        for (int i = 0; i < k; ++i) {
            if (chains[i].target[tuple[i]]) return true;
        }
        return false;
    };

    // Forward exploration from the joint initial state; target tuples are
    // absorbing for the hitting time and are not expanded.
    std::unordered_map<std::int64_t, int> id_of;
    std::vector<std::vector<int>> tuples;
    std::vector<char> absorbed;
    std::vector<std::vector<std::pair<int, double>>> adj;

    std::vector<int> init_tuple(k);
    for (int i = 0; i < k; ++i) init_tuple[i] = chains[i].init;
    auto key_of = [&](const std::vector<int>& tuple) {
        std::int64_t key = 0;
        for (int i = 0; i < k; ++i) key += stride[i] * tuple[i];
        return key;
    };
    auto intern = [&](const std::vector<int>& tuple) {
        auto [it, inserted] = id_of.try_emplace(key_of(tuple),
                                                static_cast<int>(tuples.size()));
        if (inserted) {
            tuples.push_back(tuple);
            absorbed.push_back(is_target(tuple) ? 1 : 0);
        }
        return it->second;
    };

    std::deque<int> queue{intern(init_tuple)};
    adj.resize(1);
    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        if (absorbed[id]) continue;
        const auto tuple = tuples[id];
        // Enumerate joint successors with their product probabilities.
        std::vector<int> succ(k);
        std::vector<std::pair<int, double>> row;
        auto recurse = [&](auto&& self, int agent, double p) -> void {
            if (agent == k) {
                row.push_back({intern(succ), p});
                return;
            }
            for (const auto& [t, q] : chains[agent].rows[tuple[agent]]) {
                succ[agent] = t;
                self(self, agent + 1, p * q);
            }
        };
        std::size_t before = tuples.size();
        recurse(recurse, 0, 1.0);
        for (std::size_t fresh = before; fresh < tuples.size(); ++fresh) {
            queue.push_back(static_cast<int>(fresh));
        }
        adj.resize(std::max(adj.size(), tuples.size()));
        // Merge duplicate successors (distinct component moves can coincide).
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
    // Backward reachability of the absorbing target tuples.
    std::vector<std::vector<int>> rev(n);
    for (int s = 0; s < n; ++s) {
        for (const auto& [t, p] : adj[s]) {
            if (p > 0.0) rev[t].push_back(s);
        }
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
        if (!reaches[s]) return kInf;  // positive probability of never hitting
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
    if (m <= 512) {
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
            throw Error("product hitting-time system is singular");
        }
        y = lu.solve(Eigen::VectorXd::Ones(m));
    }
    return y(unknown_id[id_of.at(key_of(init_tuple))]);
}

} // namespace mssp
