#include "mssp/autohit.hpp"

#include "mssp/profile_eval.hpp"
#include "mssp/rng.hpp"
#include "mssp/ssp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>

namespace mssp {

ParamVector ParamVector::zeros(const MsspInstance& instance) {
    ParamVector pv;
    pv.agents = instance.num_agents();
    pv.states = instance.mdp.num_states();
    pv.enabled.reserve(pv.states);
    for (int s = 0; s < pv.states; ++s) pv.enabled.push_back(instance.mdp.enabled(s));
    pv.offset.resize(static_cast<std::size_t>(pv.agents) * pv.states);
    int total = 0;
    for (int i = 0; i < pv.agents; ++i) {
        for (int s = 0; s < pv.states; ++s) {
            pv.offset[i * pv.states + s] = total;
            total += static_cast<int>(pv.enabled[s].size());
        }
    }
    pv.values.assign(total, 0.0);
    return pv;
}

int Hyperparams::resolved_gamma(const MsspInstance& instance) const {
    if (gamma > 0) return gamma;
    return instance.mdp.num_states();
}

Profile softmax_profile(const MsspInstance& instance, const ParamVector& pv) {
    if (pv.agents != instance.num_agents() || pv.states != instance.mdp.num_states()) {
        throw Error("parameter vector does not match the instance");
    }
    Profile pi;
    for (int i = 0; i < pv.agents; ++i) {
        MemorylessStrategy sigma;
        sigma.decision.resize(pv.states);
        for (int s = 0; s < pv.states; ++s) {
            const auto& en = pv.enabled[s];
            const int base = pv.index(i, s, 0);
            double top = pv.values[base];
            for (std::size_t pos = 1; pos < en.size(); ++pos) {
                top = std::max(top, pv.values[base + pos]);
            }
            double z = 0.0;
            std::vector<double> expd(en.size());
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                expd[pos] = std::exp(pv.values[base + pos] - top);
                z += expd[pos];
            }
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                sigma.decision[s].push_back({en[pos], expd[pos] / z});
            }
        }
        pi.strategies.emplace_back(std::move(sigma));
    }
    return pi;
}

double objective(const MsspInstance& instance, const ParamVector& pv, int gamma) {
    return truncated_mhit(instance, softmax_profile(instance, pv), gamma);
}

std::vector<double> gradient(const MsspInstance& instance, const ParamVector& pv,
                             int gamma) {
    if (gamma < 1) throw Error("truncation length gamma must be at least 1");
    const Mdp& mdp = instance.mdp;
    const int k = instance.num_agents();
    const int n = mdp.num_states();
    Profile pi = softmax_profile(instance, pv);

    std::vector<double> grad(pv.values.size(), 0.0);
    if (gamma == 1) return grad;  // the first term has no parameter dependence

    // Forward pass: per-agent CDF rows v_m = indicator * Abar^m, m < gamma.
    std::vector<AbsorbedChain> acs;
    std::vector<Eigen::MatrixXd> rows;  // rows[i].row(m) = v_m
    std::vector<std::vector<double>> cdf(k);
    for (int i = 0; i < k; ++i) {
        acs.push_back(build_abar(mdp, pi.memoryless(i), instance.agents[i].targets));
        Eigen::MatrixXd vm(gamma, n);
        vm.setZero();
        vm(0, instance.agents[i].init) = 1.0;
        for (int m = 1; m < gamma; ++m) {
            vm.row(m) = vm.row(m - 1) * acs[i].chain.matrix;
        }
        for (int m = 0; m < gamma; ++m) cdf[i].push_back(vm(m, acs[i].sink));
        rows.push_back(std::move(vm));
    }

    // Survival products over the other agents, per step.
    Eigen::MatrixXd others(k, gamma);
    for (int m = 0; m < gamma; ++m) {
        std::vector<double> prefix(k + 1, 1.0), suffix(k + 1, 1.0);
        for (int i = 0; i < k; ++i) prefix[i + 1] = prefix[i] * (1.0 - cdf[i][m]);
        for (int i = k - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * (1.0 - cdf[i][m]);
        for (int i = 0; i < k; ++i) others(i, m) = prefix[i] * suffix[i + 1];
    }

    for (int i = 0; i < k; ++i) {
        const auto& ac = acs[i];
        const MemorylessStrategy& sigma = pi.memoryless(i);

        // Absorbed per-action supports: target mass redirected to the sink.
        std::vector<std::vector<std::vector<std::pair<int, double>>>> support(n);
        for (int s = 0; s < n; ++s) {
            if (ac.target[s]) continue;
            const auto& en = pv.enabled[s];
            support[s].resize(en.size());
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                double to_sink = 0.0;
                for (const auto& tr : mdp.trans[s][en[pos]]) {
                    if (ac.target[tr.to]) {
                        to_sink += tr.prob;
                    } else {
                        support[s][pos].push_back({tr.to, tr.prob});
                    }
                }
                if (to_sink > 0.0) support[s][pos].push_back({ac.sink, to_sink});
            }
        }

        // Reverse pass through v_m = v_{m-1} * Abar; dE/dc_i(m) = -others(i,m).
        std::vector<std::vector<double>> dsigma(n);
        for (int s = 0; s < n; ++s) dsigma[s].assign(pv.enabled[s].size(), 0.0);
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
        u(ac.sink) = -others(i, gamma - 1);
        for (int m = gamma - 1; m >= 1; --m) {
            for (int s = 0; s < n; ++s) {
                if (ac.target[s]) continue;
                double vs = rows[i](m - 1, s);
                if (vs == 0.0) continue;
                for (std::size_t pos = 0; pos < support[s].size(); ++pos) {
                    double acc = 0.0;
                    for (const auto& [t, p] : support[s][pos]) acc += p * u(t);
                    dsigma[s][pos] += vs * acc;
                }
            }
            if (m > 1) {
                u = ac.chain.matrix * u;
                u(ac.sink) += -others(i, m - 1);
            }
        }

        // Softmax Jacobian: dX_b = sigma_b * (dsigma_b - sum_a sigma_a dsigma_a).
        for (int s = 0; s < n; ++s) {
            if (ac.target[s]) continue;
            const auto& en = pv.enabled[s];
            double inner = 0.0;
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                inner += sigma.decision[s][pos].prob * dsigma[s][pos];
            }
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                grad[pv.index(i, s, static_cast<int>(pos))] =
                    sigma.decision[s][pos].prob * (dsigma[s][pos] - inner);
            }
        }
    }
    return grad;
}

Profile lp_baseline(const MsspInstance& instance) {
    Profile pi;
    for (const auto& agent : instance.agents) {
        pi.strategies.emplace_back(
            solve_ssp(instance.mdp, agent.init, agent.targets).strategy);
    }
    return pi;
}

Profile shortest_path_baseline(const MsspInstance& instance) {
    const Mdp& mdp = instance.mdp;
    const int n = mdp.num_states();
    Profile pi;
    for (const auto& agent : instance.agents) {
        std::vector<int> choice(n);
        for (int s = 0; s < n; ++s) choice[s] = mdp.enabled(s).front();

        // Breadth-first tree from the initial state over positive edges.
        std::vector<int> parent(n, -1), via_action(n, -1);
        std::vector<char> seen(n, 0);
        std::deque<int> queue{agent.init};
        seen[agent.init] = 1;
        int found = -1;
        std::vector<char> target(n, 0);
        for (int t : agent.targets) target[t] = 1;
        while (!queue.empty() && found < 0) {
            int s = queue.front();
            queue.pop_front();
            if (target[s]) {
                found = s;
                break;
            }
            for (int a : mdp.enabled(s)) {
                std::vector<int> successors;
                for (const auto& tr : mdp.trans[s][a]) {
                    if (tr.prob > 0.0) successors.push_back(tr.to);
                }
                std::sort(successors.begin(), successors.end());
                for (int t : successors) {
                    if (!seen[t]) {
                        seen[t] = 1;
                        parent[t] = s;
                        via_action[t] = a;
                        if (target[t] && found < 0) found = t;
                        queue.push_back(t);
                    }
                }
            }
        }
        if (found >= 0) {
            for (int t = found; parent[t] >= 0; t = parent[t]) {
                choice[parent[t]] = via_action[t];
            }
        }
        pi.strategies.emplace_back(MemorylessStrategy::deterministic(choice));
    }
    return pi;
}

ParamVector init_params(InitScheme scheme, const MsspInstance& instance,
                        const Profile* baseline, std::uint64_t seed) {
    if (scheme != InitScheme::Random && baseline == nullptr) {
        throw Error("the randomized-baseline schemes require a baseline profile");
    }
    ParamVector pv = ParamVector::zeros(instance);
    Rng rng(seed);
    for (int i = 0; i < pv.agents; ++i) {
        for (int s = 0; s < pv.states; ++s) {
            const auto& en = pv.enabled[s];
            int boosted = -1;
            if (scheme != InitScheme::Random) {
                boosted = baseline->memoryless(i).dirac_action(s);
            }
            for (std::size_t pos = 0; pos < en.size(); ++pos) {
                double mean = (en[pos] == boosted) ? 10.0 : 0.0;
                pv.values[pv.index(i, s, static_cast<int>(pos))] =
                    mean + rng.next_normal();
            }
        }
    }
    return pv;
}

void optimizer_step(AdamState& state, std::vector<double>& params,
                    const std::vector<double>& grad, double step_size,
                    std::pair<double, double> moment_decays, double moment_epsilon) {
    if (params.size() != grad.size() || params.size() != state.m.size()) {
        throw Error("optimizer state does not match the parameter vector");
    }
    const auto [beta1, beta2] = moment_decays;
    state.t += 1;
    const double corr1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double corr2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t j = 0; j < params.size(); ++j) {
        state.m[j] = beta1 * state.m[j] + (1.0 - beta1) * grad[j];
        state.v[j] = beta2 * state.v[j] + (1.0 - beta2) * grad[j] * grad[j];
        double mhat = state.m[j] / corr1;
        double vhat = state.v[j] / corr2;
        params[j] -= step_size * mhat / (std::sqrt(vhat) + moment_epsilon);
    }
}

AutohitResult autohit(const MsspInstance& instance, const Hyperparams& hyper,
                      InitScheme scheme, std::vector<TracePoint>* trace) {
    ValidationReport report = validate_instance(instance);
    if (!report.ok()) throw Error(report.issues.front());

    Profile baseline;
    const Profile* baseline_ptr = nullptr;
    if (scheme == InitScheme::RandomizedLP) {
        baseline = lp_baseline(instance);
        baseline_ptr = &baseline;
    } else if (scheme == InitScheme::RandomizedShortestPath) {
        baseline = shortest_path_baseline(instance);
        baseline_ptr = &baseline;
    }

    const int gamma = hyper.resolved_gamma(instance);
    ParamVector pv = init_params(scheme, instance, baseline_ptr, hyper.seed);
    AdamState state(pv.size());
    for (int step = 0; step < hyper.steps; ++step) {
        if (trace != nullptr) trace->push_back({step, objective(instance, pv, gamma)});
        std::vector<double> grad = gradient(instance, pv, gamma);
        optimizer_step(state, pv.values, grad, hyper.step_size, hyper.moment_decays,
                       hyper.moment_epsilon);
    }
    if (trace != nullptr) {
        trace->push_back({hyper.steps, objective(instance, pv, gamma)});
    }

    AutohitResult result;
    result.profile = softmax_profile(instance, pv);
    result.value = evaluate(instance, result.profile, hyper.epsilon);
    result.params = std::move(pv);
    return result;
}

} // namespace mssp
