#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mssp {

/// Absolute tolerance for every probability-mass check in the library.
inline constexpr double kProbTol = 1e-9;

/// Error raised when an operation's precondition or an invariant is violated.
/// The message names the violated invariant so the CLI can report it verbatim.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct Transition {
    int to;
    double prob;
};

/// Explicit finite MDP: ordered states and actions plus a partial transition
/// function.  A (state, action) pair with no stored support is disabled, so
/// the enabled-action sets are recoverable exactly.
struct Mdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    /// trans[s][a] lists the successor distribution of action a in state s;
    /// an empty list means a is disabled in s.
    std::vector<std::vector<std::vector<Transition>>> trans;

    int num_states() const { return static_cast<int>(states.size()); }
    int num_actions() const { return static_cast<int>(actions.size()); }

    /// Index of a named state; throws Error for unknown names.
    int state_index(const std::string& name) const;
    int action_index(const std::string& name) const;

    bool is_enabled(int s, int a) const { return !trans[s][a].empty(); }

    /// Enabled actions of s in action order.
    std::vector<int> enabled(int s) const;

    /// Allocates the transition table for the current state/action lists.
    void init_table();
    /// Appends probability mass to (from, action, to).
    void add(int from, int action, int to, double prob);
    void add(const std::string& from, const std::string& action,
             const std::string& to, double prob);
};

/// Randomized memoryless decision rule; decision[s] is a distribution over
/// the actions enabled in s.
struct ActionProb {
    int action;
    double prob;
};

struct MemorylessStrategy {
    std::vector<std::vector<ActionProb>> decision;

    /// Dirac strategy from a per-state action choice.
    static MemorylessStrategy deterministic(const std::vector<int>& choice);
    /// Probability of playing a in s (0 when absent).
    double prob(int s, int a) const;
    bool is_deterministic() const;
    /// The chosen action if the strategy is Dirac at s, otherwise -1.
    int dirac_action(int s) const;
};

struct MemProb {
    int mem;
    double prob;
};

/// Strategy with a finite memory set: next[s][m] is the action distribution
/// in state s with memory m, and update[s][m][ei] the memory-update
/// distribution after playing the ei-th enabled action of s.
struct FiniteMemoryStrategy {
    std::vector<std::string> mem;
    int init_mem = 0;
    std::vector<std::vector<std::vector<ActionProb>>> next;
    std::vector<std::vector<std::vector<std::vector<MemProb>>>> update;

    int num_mem() const { return static_cast<int>(mem.size()); }
};

using Strategy = std::variant<MemorylessStrategy, FiniteMemoryStrategy>;

/// k-tuple of independent single-agent strategies.
struct Profile {
    std::vector<Strategy> strategies;

    int num_agents() const { return static_cast<int>(strategies.size()); }
    bool is_memoryless() const;
    const MemorylessStrategy& memoryless(int i) const;
};

/// Finite Markov chain with a row-stochastic matrix.
struct MarkovChain {
    std::vector<std::string> states;
    Eigen::MatrixXd matrix;
};

/// One agent's task: an initial state and a nonempty target set
/// (kept sorted by state index).
struct AgentTask {
    int init;
    std::vector<int> targets;
};

/// An MDP shared by k >= 1 agents with per-agent initial/target states.
struct MsspInstance {
    Mdp mdp;
    std::vector<AgentTask> agents;

    int num_agents() const { return static_cast<int>(agents.size()); }
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

/// Checks row sums, mass ranges and nonempty enabled-action sets.
/// The report lists every violation; an empty report means the MDP is valid.
ValidationReport validate_mdp(const Mdp& mdp);

/// Instance conditions on top of validate_mdp: k >= 1 and, per agent,
/// a nonempty target set not containing the initial state.
ValidationReport validate_instance(const MsspInstance& instance);

ValidationReport validate_strategy(const Mdp& mdp, const MemorylessStrategy& sigma);
ValidationReport validate_strategy(const Mdp& mdp, const FiniteMemoryStrategy& sigma);
ValidationReport validate_profile(const MsspInstance& instance, const Profile& pi);

/// Markov chain induced by a memoryless strategy:
/// A(s,t) = sum_a sigma(s)(a) * P(s,a,t).  Throws Error on invalid strategies.
MarkovChain induced_chain(const Mdp& mdp, const MemorylessStrategy& sigma);

/// Markov chain of a finite-memory strategy over configurations (s, m),
/// labeled "state@mem"; configuration (s, m) has flat index s * |Mem| + m.
MarkovChain induced_chain(const Mdp& mdp, const FiniteMemoryStrategy& sigma);

/// Exact forward-reachable set under positive-probability edges of any
/// enabled action; returns sorted state indices.
std::vector<int> reachable(const Mdp& mdp, int from);

/// Uniform distribution over the enabled actions of every state.
MemorylessStrategy uniform_strategy(const Mdp& mdp);

} // namespace mssp
