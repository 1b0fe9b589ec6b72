#pragma once

#include "mssp/coorhit.hpp"
#include "mssp/mdp.hpp"

#include <cstdint>
#include <vector>

namespace mssp {

struct SimConfig {
    std::int64_t runs = 10000;
    std::int64_t horizon = 100000;  // per-run step cap; longer runs are censored
    std::uint64_t seed = 0;
    double confidence = 0.99;
};

struct SimResult {
    double mean = 0.0;        // sample mean over the uncensored runs
    double half_width = 0.0;  // normal-approximation CI half-width
    std::int64_t censored = 0;
    std::int64_t uncensored = 0;
    bool usable = false;      // false when every run was censored
};

/// Samples multiruns of the profile: all agents step simultaneously until
/// one of them stands in its target set, recording the step count.
/// Finite-memory strategies are simulated natively (sample next, then
/// update), so this is an oracle independent of the memory encoding.
/// Per-run substreams derive from (seed, run index).  When `samples` is
/// given it receives one entry per run: the hitting time, or -1 if censored.
SimResult simulate_profile(const MsspInstance& instance, const Profile& pi,
                           const SimConfig& cfg,
                           std::vector<std::int64_t>* samples = nullptr);

/// Same sampler driven by a coordinated strategy on state tuples.
SimResult simulate_coordinated(const MsspInstance& instance, const CoordStrategy& cs,
                               const SimConfig& cfg,
                               std::vector<std::int64_t>* samples = nullptr);

/// Inverse standard-normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

} // namespace mssp
