#pragma once

#include "mssp/mdp.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace mssp {

/// Real parameters X_{i,s,a}, one per (agent, state, enabled action),
/// flattened in fixed (agent, state, action) order.  Their per-state softmax
/// images form a memoryless profile.
struct ParamVector {
    int agents = 0;
    int states = 0;
    std::vector<std::vector<int>> enabled;  // per state, shared across agents
    std::vector<int> offset;                // offset[i * states + s]
    std::vector<double> values;

    static ParamVector zeros(const MsspInstance& instance);
    int index(int agent, int state, int pos) const {
        return offset[agent * states + state] + pos;
    }
    int size() const { return static_cast<int>(values.size()); }
};

struct Hyperparams {
    int steps = 1000;
    double epsilon = 1e-9;
    /// Truncation length; 0 selects the number of states of the MDP.
    int gamma = 0;
    double step_size = 0.05;
    std::pair<double, double> moment_decays{0.9, 0.999};
    double moment_epsilon = 1e-8;
    std::uint64_t seed = 0;

    int resolved_gamma(const MsspInstance& instance) const;
};

enum class InitScheme { Random, RandomizedLP, RandomizedShortestPath };

/// Per-state softmax image of the parameters: strictly positive
/// distributions over the enabled actions, invariant under shifting a
/// state's logits by a constant.  The per-state maximum is subtracted
/// before exponentiation.
Profile softmax_profile(const MsspInstance& instance, const ParamVector& pv);

/// Truncated objective: identical to truncated_mhit of the softmax profile
/// (same code path, so the values agree bit for bit).
double objective(const MsspInstance& instance, const ParamVector& pv, int gamma);

/// Exact gradient of the truncated objective, by reverse accumulation
/// through the per-agent hitting-CDF recurrence and the softmax Jacobian.
std::vector<double> gradient(const MsspInstance& instance, const ParamVector& pv,
                             int gamma);

/// Optimal single-agent strategies, one per agent (the pi_LP baseline).
Profile lp_baseline(const MsspInstance& instance);

/// Per-agent breadth-first shortest-path strategies in the
/// positive-probability edge graph (the pi_SP baseline); ties break by state
/// order and off-path states take their first enabled action.
Profile shortest_path_baseline(const MsspInstance& instance);

/// Draws the parameters: Random ~ N(0,1) everywhere; the baseline schemes
/// use N(10,1) where the baseline selects the action and N(0,1) elsewhere.
/// Fully determined by the seed.
ParamVector init_params(InitScheme scheme, const MsspInstance& instance,
                        const Profile* baseline, std::uint64_t seed);

/// Exponential moment accumulators of the adaptive-moment optimizer.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;

    explicit AdamState(int size) : m(size, 0.0), v(size, 0.0) {}
};

/// One minimization step: biased moments decay with the given pair, are
/// bias-corrected, and parameters move by step_size * mhat / (sqrt(vhat) + eps).
void optimizer_step(AdamState& state, std::vector<double>& params,
                    const std::vector<double>& grad, double step_size,
                    std::pair<double, double> moment_decays, double moment_epsilon);

struct TracePoint {
    int step;          // number of optimizer updates applied so far
    double objective;  // truncated objective at that point
};

struct AutohitResult {
    Profile profile;
    double value = 0.0;  // +infinity when no agent hits almost surely
    ParamVector params;
};

/// The synthesis loop: initialize parameters, run `steps` gradient steps on
/// the truncated objective, and evaluate the final profile with the
/// eps-guarantee (value in [E - eps, E]).
AutohitResult autohit(const MsspInstance& instance, const Hyperparams& hyper,
                      InitScheme scheme, std::vector<TracePoint>* trace = nullptr);

} // namespace mssp
