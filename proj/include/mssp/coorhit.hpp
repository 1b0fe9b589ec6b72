#pragma once

#include "mssp/mdp.hpp"
#include "mssp/ssp.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <vector>

namespace mssp {

inline constexpr std::int64_t kDefaultProductCap = 2000000;

/// The product-size guard: MSSP_PRODUCT_CAP overrides the default when set.
std::int64_t product_cap_from_env();

/// Explicit product MDP over state tuples S^k and action tuples Act^k.
/// Tuple components are joined with '|' in the identifier strings; flat ids
/// enumerate tuples lexicographically with agent 0 most significant.
struct ProductInstance {
    Mdp mdp;
    int init = 0;
    std::vector<char> target;  // tuples with some component in its T_i
    int base_states = 0;
    int agents = 0;

    std::vector<int> tuple_of(int flat) const;
    int flat_of(const std::vector<int>& tuple) const;
};

/// Materializes the full product with |S|^k states.  Refuses construction
/// when |S|^k exceeds the cap ("product too large").
ProductInstance build_product(const MsspInstance& instance,
                              std::int64_t cap = kDefaultProductCap);

/// Deterministic memoryless coordinated strategy: a joint action tuple for
/// every relevant state tuple (the solvable core reachable from the start).
struct CoordStrategy {
    std::map<std::vector<int>, std::vector<int>> decision;
};

struct CoordResult {
    Finiteness status = Finiteness::Infinite;
    double value = 0.0;
    CoordStrategy strategy;
};

/// CoorHit: optimal coordinated expected hitting time via single-agent SSP
/// on the product, enumerated lazily from the initial tuple's reachable set.
CoordResult solve_coordinated(const MsspInstance& instance,
                              std::int64_t cap = kDefaultProductCap);

/// Expected hitting time of a fixed coordinated strategy; +infinity when the
/// targets are not reached almost surely.  Rejects strategies that leave a
/// reachable non-target tuple undecided.
double coord_value(const MsspInstance& instance, const CoordStrategy& cs);

/// Embeds a deterministic memoryless profile as the coordinated strategy
/// that plays each agent's action componentwise (decisions recorded on the
/// tuples reachable under the profile).
CoordStrategy embed_profile(const MsspInstance& instance, const Profile& pi);

nlohmann::json coord_strategy_to_json(const CoordStrategy& cs, const Mdp& mdp);
CoordStrategy coord_strategy_from_json(const nlohmann::json& j, const Mdp& mdp);

} // namespace mssp
