#pragma once

#include "mssp/mdp.hpp"

#include <vector>

namespace mssp {

enum class Finiteness { Finite, Infinite };

/// The solvable core S_R with its restricted enabled sets En_R.
struct ReachableCore {
    std::vector<char> in_core;               // mask over states
    std::vector<std::vector<int>> enabled_r; // safe actions per core state
    std::vector<int> members() const;        // sorted core state indices
};

/// Greatest set of states that can reach a target while having, outside the
/// targets, an action whose full successor support stays inside the set.
ReachableCore compute_core(const Mdp& mdp, const std::vector<int>& targets);

struct SspSolution {
    Finiteness status = Finiteness::Infinite;
    /// Optimal expected hitting times on the core; +infinity elsewhere.
    std::vector<double> values;
    /// Deterministic optimal strategy; on states outside the core it
    /// defaults to the smallest enabled action (never taken from the core).
    MemorylessStrategy strategy;
};

/// Single-agent SSP: minimal expected number of steps from init until the
/// target set is reached, along with a greedy deterministic strategy
/// attaining it.  Infinite iff init lies outside the solvable core.
/// Rejects init inside the target set and empty target sets.
SspSolution solve_ssp(const Mdp& mdp, int init, const std::vector<int>& targets);

struct EvalResult {
    Finiteness status = Finiteness::Infinite;
    double value = 0.0;          // expected hitting time; +infinity if Infinite
    std::vector<char> support;   // the set S_sigma
};

/// Expected hitting time of a fixed memoryless strategy, via the linear
/// system over S_sigma (zero on targets, 1 + chain-weighted successors
/// elsewhere).  Infinite iff init is outside S_sigma.
EvalResult eval_strategy(const Mdp& mdp, const MemorylessStrategy& sigma, int init,
                         const std::vector<int>& targets);

} // namespace mssp
