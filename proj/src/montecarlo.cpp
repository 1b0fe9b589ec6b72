#include "mssp/montecarlo.hpp"

#include "mssp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mssp {

namespace {

/// Pairwise summation keeps the floating error of million-run reductions
/// independent of the accumulation schedule.
double pairwise_sum(const double* data, std::size_t count) {
    if (count <= 8) {
        double sum = 0.0;
        for (std::size_t i = 0; i < count; ++i) sum += data[i];
        return sum;
    }
    std::size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}


SimResult summarize(const std::vector<double>& hits, std::int64_t censored,
                    double confidence) {
    SimResult result;
    result.censored = censored;
    result.uncensored = static_cast<std::int64_t>(hits.size());
    result.usable = !hits.empty();
    if (hits.empty()) return result;
    const double n = static_cast<double>(hits.size());
    result.mean = pairwise_sum(hits.data(), hits.size()) / n;
    if (hits.size() < 2) {
        result.half_width = std::numeric_limits<double>::infinity();
        return result;
    }
    std::vector<double> sq(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        double d = hits[i] - result.mean;
        sq[i] = d * d;
    }
    double var = pairwise_sum(sq.data(), sq.size()) / (n - 1.0);
    double z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
    result.half_width = z * std::sqrt(var / n);
    return result;
}

} // namespace

SimResult simulate_profile(const MsspInstance& instance, const Profile& pi,
                           const SimConfig& cfg, std::vector<std::int64_t>* samples) {
    ValidationReport report = validate_profile(instance, pi);
    if (!report.ok()) throw Error(report.issues.front());
    if (cfg.horizon < 1) throw Error("simulation horizon must be at least 1");
    if (cfg.runs < 1) throw Error("at least one simulation run is required");

    const Mdp& mdp = instance.mdp;
    const int k = instance.num_agents();
    std::vector<std::vector<char>> target(k, std::vector<char>(mdp.num_states(), 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target[i][t] = 1;
    }
    std::vector<std::vector<int>> enabled;
    for (int s = 0; s < mdp.num_states(); ++s) enabled.push_back(mdp.enabled(s));

    std::vector<double> hits;
    hits.reserve(cfg.runs);
    std::int64_t censored = 0;
    std::vector<int> state(k), mem(k);
    for (std::int64_t run = 0; run < cfg.runs; ++run) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(run));
        for (int i = 0; i < k; ++i) {
            state[i] = instance.agents[i].init;
            const auto* fm = std::get_if<FiniteMemoryStrategy>(&pi.strategies[i]);
            mem[i] = fm != nullptr ? fm->init_mem : 0;
        }
        std::int64_t mhit = -1;
        for (std::int64_t step = 1; step <= cfg.horizon && mhit < 0; ++step) {
            for (int i = 0; i < k; ++i) {
                int action;
                if (const auto* sigma =
                        std::get_if<MemorylessStrategy>(&pi.strategies[i])) {
                    double u = rng.next_double();
                    double acc = 0.0;
                    action = sigma->decision[state[i]].back().action;
                    for (const auto& ap : sigma->decision[state[i]]) {
                        acc += ap.prob;
                        if (u < acc) {
                            action = ap.action;
                            break;
                        }
                    }
                } else {
                    const auto& fm = std::get<FiniteMemoryStrategy>(pi.strategies[i]);
                    const auto& dist = fm.next[state[i]][mem[i]];
                    double u = rng.next_double();
                    double acc = 0.0;
                    action = dist.back().action;
                    for (const auto& ap : dist) {
                        acc += ap.prob;
                        if (u < acc) {
                            action = ap.action;
                            break;
                        }
                    }
                    const auto& en = enabled[state[i]];
                    auto ei = std::find(en.begin(), en.end(), action) - en.begin();
                    const auto& mdist = fm.update[state[i]][mem[i]][ei];
                    double um = rng.next_double();
                    double accm = 0.0;
                    int next_mem = mdist.back().mem;
                    for (const auto& mp : mdist) {
                        accm += mp.prob;
                        if (um < accm) {
                            next_mem = mp.mem;
                            break;
                        }
                    }
                    mem[i] = next_mem;
                }
                const auto& support = mdp.trans[state[i]][action];
                double u = rng.next_double();
                double acc = 0.0;
                int to = support.back().to;
                for (const auto& tr : support) {
                    acc += tr.prob;
                    if (u < acc) {
                        to = tr.to;
                        break;
                    }
                }
                state[i] = to;
            }
            for (int i = 0; i < k; ++i) {
                if (target[i][state[i]]) {
                    mhit = step;
                    break;
                }
            }
        }
        if (mhit < 0) {
            ++censored;
        } else {
            hits.push_back(static_cast<double>(mhit));
        }
        if (samples != nullptr) samples->push_back(mhit);
    }
    return summarize(hits, censored, cfg.confidence);
}

SimResult simulate_coordinated(const MsspInstance& instance, const CoordStrategy& cs,
                               const SimConfig& cfg,
                               std::vector<std::int64_t>* samples) {
    ValidationReport report = validate_instance(instance);
    if (!report.ok()) throw Error(report.issues.front());
    if (cfg.horizon < 1) throw Error("simulation horizon must be at least 1");
    if (cfg.runs < 1) throw Error("at least one simulation run is required");

    const Mdp& mdp = instance.mdp;
    const int k = instance.num_agents();
    std::vector<std::vector<char>> target(k, std::vector<char>(mdp.num_states(), 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target[i][t] = 1;
    }

    std::vector<double> hits;
    hits.reserve(cfg.runs);
    std::int64_t censored = 0;
    for (std::int64_t run = 0; run < cfg.runs; ++run) {
        Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(run));
        std::vector<int> tuple(k);
        for (int i = 0; i < k; ++i) tuple[i] = instance.agents[i].init;
        std::int64_t mhit = -1;
        for (std::int64_t step = 1; step <= cfg.horizon && mhit < 0; ++step) {
            auto it = cs.decision.find(tuple);
            if (it == cs.decision.end()) {
                throw Error("coordinated strategy is undefined on a reachable tuple");
            }
            for (int i = 0; i < k; ++i) {
                const auto& support = mdp.trans[tuple[i]][it->second[i]];
                if (support.empty()) {
                    throw Error("coordinated strategy plays a disabled action");
                }
                double u = rng.next_double();
                double acc = 0.0;
                int to = support.back().to;
                for (const auto& tr : support) {
                    acc += tr.prob;
                    if (u < acc) {
                        to = tr.to;
                        break;
                    }
                }
                tuple[i] = to;
            }
            for (int i = 0; i < k; ++i) {
                if (target[i][tuple[i]]) {
                    mhit = step;
                    break;
                }
            }
        }
        if (mhit < 0) {
            ++censored;
        } else {
            hits.push_back(static_cast<double>(mhit));
        }
        if (samples != nullptr) samples->push_back(mhit);
    }
    return summarize(hits, censored, cfg.confidence);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("quantile argument must lie in (0,1)");
    // Acklam's rational approximation, relative error below 1.2e-9.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

} // namespace mssp
