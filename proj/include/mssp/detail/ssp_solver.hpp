#pragma once

#include "mssp/mdp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <limits>
#include <vector>

namespace mssp::detail {

// Shared expected-hitting-time machinery, written against a "view" so the
// explicit single-agent solver and the lazily enumerated product solver use
// the same code.  A view provides:
//   int  num_states() const;
//   int  num_choices(int s) const;                      // >= 1
//   void for_successors(int s, int c, F&& f) const;     // f(int to, double prob)
// Choice ids are ordered; ties between equally good choices are broken
// toward the smallest id.

/// Improvement threshold for policy iteration.
inline constexpr double kImproveTol = 1e-12;

/// Switch point between dense LU and sparse LU policy evaluation.
inline constexpr int kDenseLimit = 512;

struct CoreResult {
    std::vector<char> in_core;
    /// Safe choices per core state: full successor support inside the core.
    /// Computed for target states as well; empty for states outside the core.
    std::vector<std::vector<int>> safe;
};

/// Greatest fixed point of the two pruning rules: every kept state reaches a
/// target through kept states, and every kept non-target state has a choice
/// whose entire support stays kept.  Target states are never pruned.
template <class View>
CoreResult compute_core_impl(const View& view, const std::vector<char>& target) {
    const int n = view.num_states();
    CoreResult result;
    result.in_core.assign(n, 1);
    result.safe.assign(n, {});

    bool changed = true;
    while (changed) {
        changed = false;
        // Safe choices under the current candidate set.
        for (int s = 0; s < n; ++s) {
            result.safe[s].clear();
            if (!result.in_core[s]) continue;
            for (int c = 0; c < view.num_choices(s); ++c) {
                bool inside = true;
                view.for_successors(s, c, [&](int to, double p) {
                    if (p > 0.0 && !result.in_core[to]) inside = false;
                });
                if (inside) result.safe[s].push_back(c);
            }
        }
        // Non-target states need at least one safe choice.
        for (int s = 0; s < n; ++s) {
            if (result.in_core[s] && !target[s] && result.safe[s].empty()) {
                result.in_core[s] = 0;
                changed = true;
            }
        }
        // Backward reachability of targets through safe choices.
        std::vector<char> reaches(n, 0);
        for (int s = 0; s < n; ++s) {
            reaches[s] = static_cast<char>(result.in_core[s] && target[s]);
        }
        bool grew = true;
        while (grew) {
            grew = false;
            for (int s = 0; s < n; ++s) {
                if (!result.in_core[s] || reaches[s]) continue;
                bool hit = false;
                for (int c : result.safe[s]) {
                    view.for_successors(s, c, [&](int to, double p) {
                        if (p > 0.0 && reaches[to]) hit = true;
                    });
                    if (hit) break;
                }
                if (hit) {
                    reaches[s] = 1;
                    grew = true;
                }
            }
        }
        for (int s = 0; s < n; ++s) {
            if (result.in_core[s] && !reaches[s]) {
                result.in_core[s] = 0;
                changed = true;
            }
        }
    }
    return result;
}

struct SolveResult {
    bool finite = false;         // initial state inside the core
    std::vector<double> values;  // +infinity outside the core
    std::vector<int> policy;     // safe choice id per core non-target state, -1 elsewhere
    CoreResult core;
};

template <class View>
std::vector<double> evaluate_policy(const View& view, const std::vector<char>& target,
                                    const CoreResult& core,
                                    const std::vector<int>& policy) {
    const int n = view.num_states();
    std::vector<int> unknown_id(n, -1);
    std::vector<int> unknown_states;
    for (int s = 0; s < n; ++s) {
        if (core.in_core[s] && !target[s]) {
            unknown_id[s] = static_cast<int>(unknown_states.size());
            unknown_states.push_back(s);
        }
    }
    const int m = static_cast<int>(unknown_states.size());
    std::vector<double> values(n, std::numeric_limits<double>::infinity());
    for (int s = 0; s < n; ++s) {
        if (core.in_core[s] && target[s]) values[s] = 0.0;
    }
    if (m == 0) return values;

    Eigen::VectorXd x(m);
    if (m <= kDenseLimit) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m);
        for (int row = 0; row < m; ++row) {
            int s = unknown_states[row];
            view.for_successors(s, policy[s], [&](int to, double p) {
                if (unknown_id[to] >= 0) a(row, unknown_id[to]) -= p;
            });
        }
        x = a.partialPivLu().solve(Eigen::VectorXd::Ones(m));
    } else {
        std::vector<Eigen::Triplet<double>> triplets;
        for (int row = 0; row < m; ++row) {
            int s = unknown_states[row];
            double diag = 1.0;
            view.for_successors(s, policy[s], [&](int to, double p) {
                if (to == s) {
                    diag -= p;
                } else if (unknown_id[to] >= 0) {
                    triplets.emplace_back(row, unknown_id[to], -p);
                }
            });
            triplets.emplace_back(row, row, diag);
        }
        Eigen::SparseMatrix<double> a(m, m);
        a.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(a);
        if (lu.info() != Eigen::Success) {
            throw Error("policy evaluation system is singular");
        }
        x = lu.solve(Eigen::VectorXd::Ones(m));
    }
    for (int row = 0; row < m; ++row) {
        double v = x(row);
        if (!std::isfinite(v) || v < -kProbTol) {
            throw Error("policy evaluation produced an invalid hitting time");
        }
        values[unknown_states[row]] = v;
    }
    return values;
}

/// Optimal expected hitting times by policy iteration with exact linear
/// solves.  The initial policy follows hop distances toward the targets, so
/// it reaches them almost surely; improvement switches only on gains above
/// kImproveTol and a final pass re-breaks ties toward the smallest choice id.
template <class View>
SolveResult solve_ssp_impl(const View& view, const std::vector<char>& target) {
    const int n = view.num_states();
    SolveResult result;
    result.core = compute_core_impl(view, target);
    result.policy.assign(n, -1);
    const auto& core = result.core;

    // Hop distances to the targets inside the core (safe choices only).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    for (int s = 0; s < n; ++s) {
        if (core.in_core[s] && target[s]) dist[s] = 0.0;
    }
    bool moved = true;
    while (moved) {
        moved = false;
        for (int s = 0; s < n; ++s) {
            if (!core.in_core[s] || target[s]) continue;
            double best = inf;
            for (int c : core.safe[s]) {
                double near = inf;
                view.for_successors(s, c, [&](int to, double p) {
                    if (p > 0.0 && dist[to] < near) near = dist[to];
                });
                if (near + 1.0 < best) best = near + 1.0;
            }
            if (best < dist[s]) {
                dist[s] = best;
                moved = true;
            }
        }
    }
    for (int s = 0; s < n; ++s) {
        if (!core.in_core[s] || target[s]) continue;
        for (int c : core.safe[s]) {
            double near = inf;
            view.for_successors(s, c, [&](int to, double p) {
                if (p > 0.0 && dist[to] < near) near = dist[to];
            });
            if (near < dist[s]) {
                result.policy[s] = c;
                break;
            }
        }
    }

    result.values = evaluate_policy(view, target, core, result.policy);

    auto choice_value = [&](int s, int c) {
        double q = 1.0;
        view.for_successors(s, c, [&](int to, double p) { q += p * result.values[to]; });
        return q;
    };

    for (int round = 0; round < 100000; ++round) {
        bool improved = false;
        for (int s = 0; s < n; ++s) {
            if (!core.in_core[s] || target[s]) continue;
            double best = inf;
            int best_c = result.policy[s];
            for (int c : core.safe[s]) {
                double q = choice_value(s, c);
                if (q < best - kImproveTol) {
                    best = q;
                    best_c = c;
                } else if (q < best) {
                    best = q;
                }
            }
            if (best < result.values[s] - kImproveTol && best_c != result.policy[s]) {
                result.policy[s] = best_c;
                improved = true;
            }
        }
        if (!improved) break;
        result.values = evaluate_policy(view, target, core, result.policy);
    }

    // Deterministic tie-breaking: smallest choice id among the optimal ones.
    bool retied = false;
    for (int s = 0; s < n; ++s) {
        if (!core.in_core[s] || target[s]) continue;
        double best = inf;
        for (int c : core.safe[s]) best = std::min(best, choice_value(s, c));
        for (int c : core.safe[s]) {
            if (choice_value(s, c) <= best + kImproveTol) {
                if (c != result.policy[s]) {
                    result.policy[s] = c;
                    retied = true;
                }
                break;
            }
        }
    }
    if (retied) result.values = evaluate_policy(view, target, core, result.policy);
    return result;
}

} // namespace mssp::detail
