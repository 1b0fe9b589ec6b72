#pragma once

#include "mssp/mdp.hpp"

#include <cstdint>
#include <vector>

namespace mssp {

/// Per-agent stochastic matrix with the agent's targets merged into a single
/// sink; its powers give the hitting-time CDF at the initial state.
struct AbsorbedChain {
    MarkovChain chain;
    int sink;                  // the designated target, first of T in state order
    std::vector<char> target;  // mask of the agent's target set
};

/// Absorbed matrix of the chain induced by sigma: rows of the target set are
/// identity rows, all target-bound mass from outside is redirected to the
/// first target in state order.
AbsorbedChain build_abar(const Mdp& mdp, const MemorylessStrategy& sigma,
                         const std::vector<int>& targets);

/// Probability of hitting the targets within ell steps from init, i.e. the
/// (init, sink) entry of the ell-th matrix power, computed by ell
/// vector-matrix products.
double hit_cdf(const AbsorbedChain& ac, int init, int ell);

/// CDF prefix [c_0, ..., c_len] with c_m = hit_cdf(ac, init, m).
std::vector<double> hit_cdf_prefix(const AbsorbedChain& ac, int init, int len);

/// Truncated expected hitting time of the first agent:
///   sum_{l=1..gamma} prod_i (1 - cdf_i(l-1)).
/// A lower bound on the exact value, nondecreasing in gamma.  The profile
/// must be memoryless (lift finite-memory profiles first); gamma >= 1.
double truncated_mhit(const MsspInstance& instance, const Profile& pi, int gamma);

/// Truncation length certificate: the tail above rho is at most `bound`,
/// witnessed by agent `witness_agent`.
struct TruncationBound {
    int rho = 0;
    double bound = 0.0;
    int witness_agent = -1;
};

/// Least rho whose tail bound
///   delta<rho>_i * prod_{j != i} (1 - cdf_j(rho))
/// drops to eps for some agent i with a finite expected hitting time
/// (searched by doubling, then bisected).  Fails when no agent hits its
/// targets almost surely.
TruncationBound gamma_eps(const MsspInstance& instance, const Profile& pi, double eps);

/// E-guaranteed evaluation: returns Val with E - eps <= Val <= E where E is
/// the exact expected hitting time of the first agent.  Returns +infinity
/// when no agent reaches its targets almost surely (then E is infinite).
double evaluate(const MsspInstance& instance, const Profile& pi, double eps);

/// Exact oracle: expected hitting time of the union target in the product of
/// the per-agent induced chains, by direct linear solve on the states
/// reachable from the joint initial state.  Exponential in the number of
/// agents; refuses products larger than `cap` states.  Finite-memory
/// strategies are expanded over their configuration chains.
double exact_mhit_product(const MsspInstance& instance, const Profile& pi,
                          std::int64_t cap = 200000);

} // namespace mssp
