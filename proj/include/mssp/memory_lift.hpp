#pragma once

#include "mssp/coorhit.hpp"
#include "mssp/mdp.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mssp {

/// MDP with a finite memory set encoded into its states: state (s, m) has
/// identifier "s@m" and flat index s * |Mem| + m, action (a, m') has
/// identifier "a@m'" and flat index a * |Mem| + m'.  Every transition
/// satisfies P((s,m),(a,m'),(t,m')) = P(s,a,t).
struct LiftedMdp {
    Mdp mdp;
    std::vector<std::string> mem;
    int base_states = 0;
    int base_actions = 0;

    int num_mem() const { return static_cast<int>(mem.size()); }
    int lifted_state(int s, int m) const { return s * num_mem() + m; }
    std::pair<int, int> original_state(int ls) const {
        return {ls / num_mem(), ls % num_mem()};
    }
    int lifted_action(int a, int m) const { return a * num_mem() + m; }
    std::pair<int, int> original_action(int la) const {
        return {la / num_mem(), la % num_mem()};
    }
};

/// Memory encoding with |S|*n states and |Act|*n actions; every action
/// (a, m') is enabled in (s, m) exactly when a is enabled in s.
LiftedMdp lift_mdp(const Mdp& mdp, int mem_size,
                   std::int64_t cap = kDefaultProductCap);
LiftedMdp lift_mdp(const Mdp& mdp, const std::vector<std::string>& mem_names,
                   std::int64_t cap = kDefaultProductCap);

/// Memoryless image of a finite-memory strategy:
/// sigma_bar(s,m)(a,m') = next(s,m)(a) * update((s,m),a)(m').
/// The strategy's memory names must match the lifted MDP's.
MemorylessStrategy lift_strategy(const FiniteMemoryStrategy& sigma,
                                 const LiftedMdp& lifted);

/// Inverse translation: next is the marginal over memory successors and
/// update the conditional; actions with zero marginal get a uniform update
/// (they are never taken, so the induced chain is unaffected).
FiniteMemoryStrategy lower_strategy(const MemorylessStrategy& sigma_bar,
                                    const LiftedMdp& lifted);

/// Lifts the instance itself: agent i starts at (iota_i, init_mem[i]) and
/// targets T_i x Mem.
MsspInstance lift_instance(const MsspInstance& instance, const LiftedMdp& lifted,
                           const std::vector<int>& init_mem);

} // namespace mssp
