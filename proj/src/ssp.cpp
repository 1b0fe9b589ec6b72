#include "mssp/ssp.hpp"

#include "mssp/detail/ssp_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>

namespace mssp {

namespace {

struct ExplicitView {
    const Mdp& mdp;
    std::vector<std::vector<int>> enabled;

    explicit ExplicitView(const Mdp& m) : mdp(m) {
        enabled.reserve(m.states.size());
        for (int s = 0; s < m.num_states(); ++s) enabled.push_back(m.enabled(s));
    }

    int num_states() const { return mdp.num_states(); }
    int num_choices(int s) const { return static_cast<int>(enabled[s].size()); }

    template <class F>
    void for_successors(int s, int c, F&& f) const {
        for (const auto& tr : mdp.trans[s][enabled[s][c]]) f(tr.to, tr.prob);
    }
};

std::vector<char> target_mask(const Mdp& mdp, const std::vector<int>& targets) {
    std::vector<char> mask(mdp.states.size(), 0);
    for (int t : targets) {
        if (t < 0 || t >= mdp.num_states()) {
            throw Error("target state index " + std::to_string(t) + " out of range");
        }
        mask[t] = 1;
    }
    return mask;
}

} // namespace

std::vector<int> ReachableCore::members() const {
    std::vector<int> out;
    for (std::size_t s = 0; s < in_core.size(); ++s) {
        if (in_core[s]) out.push_back(static_cast<int>(s));
    }
    return out;
}

ReachableCore compute_core(const Mdp& mdp, const std::vector<int>& targets) {
    ExplicitView view(mdp);
    auto mask = target_mask(mdp, targets);
    auto core = detail::compute_core_impl(view, mask);
    ReachableCore result;
    result.in_core = std::move(core.in_core);
    result.enabled_r.assign(mdp.states.size(), {});
    for (int s = 0; s < mdp.num_states(); ++s) {
        for (int c : core.safe[s]) result.enabled_r[s].push_back(view.enabled[s][c]);
    }
    return result;
}

SspSolution solve_ssp(const Mdp& mdp, int init, const std::vector<int>& targets) {
    if (targets.empty()) throw Error("target set is empty");
    auto mask = target_mask(mdp, targets);
    if (init < 0 || init >= mdp.num_states()) {
        throw Error("initial state index out of range");
    }
    if (mask[init]) throw Error("initial state lies inside the target set");

    ExplicitView view(mdp);
    auto solved = detail::solve_ssp_impl(view, mask);

    SspSolution solution;
    solution.status = solved.core.in_core[init] ? Finiteness::Finite : Finiteness::Infinite;
    solution.values = std::move(solved.values);

    std::vector<int> choice(mdp.states.size(), 0);
    for (int s = 0; s < mdp.num_states(); ++s) {
        int action = view.enabled[s].front();
        if (solved.core.in_core[s] && !mask[s] && solved.policy[s] >= 0) {
            action = view.enabled[s][solved.policy[s]];
        }
        choice[s] = action;
    }
    solution.strategy = MemorylessStrategy::deterministic(choice);
    return solution;
}

EvalResult eval_strategy(const Mdp& mdp, const MemorylessStrategy& sigma, int init,
                         const std::vector<int>& targets) {
    ValidationReport report = validate_strategy(mdp, sigma);
    if (!report.ok()) throw Error(report.issues.front());
    if (targets.empty()) throw Error("target set is empty");
    auto mask = target_mask(mdp, targets);
    if (mask[init]) throw Error("initial state lies inside the target set");

    const int n = mdp.num_states();
    MarkovChain chain = induced_chain(mdp, sigma);

    // Backward reachability of the targets in the chain.
    std::vector<char> reaches(n, 0);
    for (int t : targets) reaches[t] = 1;
    bool grew = true;
    while (grew) {
        grew = false;
        for (int s = 0; s < n; ++s) {
            if (reaches[s]) continue;
            for (int t = 0; t < n; ++t) {
                if (chain.matrix(s, t) > 0.0 && reaches[t]) {
                    reaches[s] = 1;
                    grew = true;
                    break;
                }
            }
        }
    }

    // Shrink to the maximal successor-closed subset (outside the targets).
    std::vector<char> support = reaches;
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (int s = 0; s < n; ++s) {
            if (!support[s] || mask[s]) continue;
            for (int t = 0; t < n; ++t) {
                if (chain.matrix(s, t) > 0.0 && !support[t]) {
                    support[s] = 0;
                    shrunk = true;
                    break;
                }
            }
        }
    }

    EvalResult result;
    result.support = support;
    if (!support[init]) {
        result.status = Finiteness::Infinite;
        result.value = std::numeric_limits<double>::infinity();
        return result;
    }

    std::vector<int> unknown_id(n, -1);
    std::vector<int> unknown_states;
    for (int s = 0; s < n; ++s) {
        if (support[s] && !mask[s]) {
            unknown_id[s] = static_cast<int>(unknown_states.size());
            unknown_states.push_back(s);
        }
    }
    const int m = static_cast<int>(unknown_states.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
    for (int row = 0; row < m; ++row) {
        int s = unknown_states[row];
        for (int t = 0; t < n; ++t) {
            double p = chain.matrix(s, t);
            if (p > 0.0 && unknown_id[t] >= 0) a(row, unknown_id[t]) -= p;
        }
    }
    Eigen::VectorXd y = a.partialPivLu().solve(Eigen::VectorXd::Ones(m));

    result.status = Finiteness::Finite;
    result.value = y(unknown_id[init]);
    return result;
}

} // namespace mssp
