#pragma once

#include "mssp/mdp.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace mssp {

/// Grid-city benchmark: an l x 5 grid with moves left/right/up/down, where
/// congested crossroads succeed only with a per-state probability drawn from
/// [1/8, 1/2] and otherwise keep the agent in place.  All agents travel from
/// s_1_3 to s_l_3.
struct GridConfig {
    int length = 10;          // l >= 2
    double congestion = 0.2;  // probability that a state is congested
    std::uint64_t seed = 0;
    int agents = 1;
};

MsspInstance gen_grid(const GridConfig& cfg);

/// The introductory two-agent example: action a walks a deterministic
/// two-step path to the target while action b reaches it in one step or in
/// four, uniformly at random.  Two agents, both starting at s.
MsspInstance corpus_fig1();

/// Gadget MDP with entry states g0 (hits in 1 or 4 steps, half/half) and
/// g1 (hits in 2 steps with 0.9, else in 7).
Mdp corpus_gadget();

/// Two agents placed on gadget entries (each of entry1/entry2 is "g0" or "g1").
MsspInstance gadget_pair(const std::string& entry1, const std::string& entry2);

/// Two agents: one on a deterministic four-step path, the other choosing
/// between a one-step lottery (action a) and a two-step lottery (action b).
/// Mixing the actions beats every deterministic choice.
MsspInstance corpus_randomized();

struct MemoryHierarchy {
    MsspInstance instance;
    /// Countdown strategy with n+1 memory states: play bot at s exactly when
    /// the counter reaches 1; the counter decreases on every visit to s.
    FiniteMemoryStrategy countdown;
};

/// Two-agent family whose optimum needs n+1 memory states: agent 1 loops
/// between s and a coin state while agent 2 walks down a chain of length
/// 2n+2 toward the shared target.
MemoryHierarchy corpus_memory_hierarchy(int n);

/// Two-agent family with unbounded price of autonomy, parameterized by
/// rho > 1: agent 2 can bail agent 1 out only when it knows which of the
/// slow states agent 1 fell into.
MsspInstance corpus_price_autonomy(double rho);

/// Positive 1-in-3-SAT restricted to n clauses over n variables with every
/// variable occurring exactly three times; clauses are variable-index triples.
struct OneInThreeFormula {
    int n = 0;
    std::vector<std::array<int, 3>> clauses;
};

ValidationReport validate_formula(const OneInThreeFormula& phi);
OneInThreeFormula formula_from_json(const nlohmann::json& j);
nlohmann::json formula_to_json(const OneInThreeFormula& phi);

struct SatReduction {
    MsspInstance instance;
    double bound;  // the threshold B separating 1-in-3-satisfying assignments
};

/// Two-agent reduction from the restricted 1-in-3-SAT problem: consistent
/// deterministic profiles encode truth assignments, and an assignment is
/// 1-in-3-satisfying exactly when its profile achieves the bound B.
SatReduction gen_1in3(const OneInThreeFormula& phi);

/// Closed-form threshold B(n) of the reduction.
double bound_B(int n);

/// The consistent deterministic profile encoding a truth assignment
/// (assignment[i] picks a1 at the i-th branching state of both agents).
Profile sat_assignment_profile(const MsspInstance& instance,
                               const OneInThreeFormula& phi,
                               const std::vector<int>& assignment);

} // namespace mssp
