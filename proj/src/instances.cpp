#include "mssp/instances.hpp"

#include "mssp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace mssp {

namespace {

void require_valid(const MsspInstance& instance, const char* what) {
    ValidationReport report = validate_instance(instance);
    if (!report.ok()) {
        throw Error(std::string(what) + ": " + report.issues.front());
    }
}

} // namespace

MsspInstance gen_grid(const GridConfig& cfg) {
    if (cfg.length < 2) throw Error("grid length must be at least 2");
    if (cfg.congestion < 0.0 || cfg.congestion > 1.0) {
        throw Error("congestion probability must lie in [0,1]");
    }
    if (cfg.agents < 1) throw Error("at least one agent is required");

    MsspInstance instance;
    Mdp& mdp = instance.mdp;
    const int l = cfg.length;
    auto name = [](int x, int y) {
        return "s_" + std::to_string(x) + "_" + std::to_string(y);
    };
    for (int x = 1; x <= l; ++x) {
        for (int y = 1; y <= 5; ++y) mdp.states.push_back(name(x, y));
    }
    mdp.actions = {"left", "right", "up", "down"};
    mdp.init_table();

    auto index = [&](int x, int y) { return (x - 1) * 5 + (y - 1); };

    // Congestion is sampled per state in state order, so the instance is a
    // pure function of the seed.
    Rng rng(cfg.seed);
    std::vector<double> success(mdp.states.size(), 1.0);
    for (int x = 1; x <= l; ++x) {
        for (int y = 1; y <= 5; ++y) {
            if (rng.next_double() < cfg.congestion) {
                success[index(x, y)] = rng.next_double(0.125, 0.5);
            }
        }
    }

    const int dx[4] = {-1, 1, 0, 0};
    const int dy[4] = {0, 0, 1, -1};
    for (int x = 1; x <= l; ++x) {
        for (int y = 1; y <= 5; ++y) {
            int s = index(x, y);
            for (int a = 0; a < 4; ++a) {
                int nx = x + dx[a];
                int ny = y + dy[a];
                if (nx < 1 || nx > l || ny < 1 || ny > 5) {
                    mdp.trans[s][a].push_back({s, 1.0});  // off-grid: stay put
                } else if (success[s] < 1.0) {
                    mdp.trans[s][a].push_back({index(nx, ny), success[s]});
                    mdp.trans[s][a].push_back({s, 1.0 - success[s]});
                } else {
                    mdp.trans[s][a].push_back({index(nx, ny), 1.0});
                }
            }
        }
    }

    for (int i = 0; i < cfg.agents; ++i) {
        instance.agents.push_back({index(1, 3), {index(l, 3)}});
    }
    require_valid(instance, "grid generation produced an invalid instance");
    return instance;
}

MsspInstance corpus_fig1() {
    MsspInstance instance;
    Mdp& mdp = instance.mdp;
    mdp.states = {"s", "m1", "m2", "b1", "b2", "b3", "tau"};
    mdp.actions = {"a", "b"};
    mdp.init_table();
    mdp.add("s", "a", "m1", 0.5);
    mdp.add("s", "a", "m2", 0.5);
    mdp.add("s", "b", "tau", 0.5);
    mdp.add("s", "b", "b1", 0.5);
    mdp.add("m1", "a", "tau", 1.0);
    mdp.add("m2", "a", "tau", 1.0);
    mdp.add("b1", "a", "b2", 1.0);
    mdp.add("b2", "a", "b3", 1.0);
    mdp.add("b3", "a", "tau", 1.0);
    mdp.add("tau", "a", "tau", 1.0);
    int s = mdp.state_index("s");
    int tau = mdp.state_index("tau");
    instance.agents = {{s, {tau}}, {s, {tau}}};
    require_valid(instance, "fig1 corpus");
    return instance;
}

Mdp corpus_gadget() {
    Mdp mdp;
    mdp.states = {"g0", "g1", "gp1", "gp2", "gp3", "gp4", "gp5", "gp6", "tau"};
    mdp.actions = {"a"};
    mdp.init_table();
    mdp.add("g0", "a", "tau", 0.5);
    mdp.add("g0", "a", "gp3", 0.5);
    mdp.add("g1", "a", "gp1", 0.9);
    mdp.add("g1", "a", "gp6", 0.1);
    mdp.add("gp1", "a", "tau", 1.0);
    for (int l = 2; l <= 6; ++l) {
        mdp.add("gp" + std::to_string(l), "a", "gp" + std::to_string(l - 1), 1.0);
    }
    mdp.add("tau", "a", "tau", 1.0);
    return mdp;
}

MsspInstance gadget_pair(const std::string& entry1, const std::string& entry2) {
    MsspInstance instance;
    instance.mdp = corpus_gadget();
    int tau = instance.mdp.state_index("tau");
    instance.agents = {{instance.mdp.state_index(entry1), {tau}},
                       {instance.mdp.state_index(entry2), {tau}}};
    require_valid(instance, "gadget pair");
    return instance;
}

MsspInstance corpus_randomized() {
    MsspInstance instance;
    Mdp& mdp = instance.mdp;
    mdp.states = {"s1", "c1", "c2", "c3", "s2", "d", "tau"};
    mdp.actions = {"a", "b"};
    mdp.init_table();
    mdp.add("s1", "a", "c1", 1.0);
    mdp.add("c1", "a", "c2", 1.0);
    mdp.add("c2", "a", "c3", 1.0);
    mdp.add("c3", "a", "tau", 1.0);
    mdp.add("s2", "a", "tau", 1.0 / 8.0);
    mdp.add("s2", "a", "s2", 7.0 / 8.0);
    mdp.add("s2", "b", "d", 1.0);
    mdp.add("d", "a", "tau", 9.0 / 26.0);
    mdp.add("d", "a", "s2", 17.0 / 26.0);
    mdp.add("tau", "a", "tau", 1.0);
    int tau = mdp.state_index("tau");
    instance.agents = {{mdp.state_index("s1"), {tau}}, {mdp.state_index("s2"), {tau}}};
    require_valid(instance, "randomized-profiles corpus");
    return instance;
}

MemoryHierarchy corpus_memory_hierarchy(int n) {
    if (n < 1) throw Error("memory-hierarchy parameter must be at least 1");
    MemoryHierarchy out;
    Mdp& mdp = out.instance.mdp;
    mdp.states = {"s", "q"};
    for (int j = 0; j <= 2 * n + 2; ++j) mdp.states.push_back("r" + std::to_string(j));
    mdp.actions = {"top", "bot"};
    mdp.init_table();
    mdp.add("s", "top", "q", 1.0);
    mdp.add("s", "bot", "r" + std::to_string(2 * n + 2), 0.75);
    mdp.add("s", "bot", "r0", 0.25);
    mdp.add("q", "top", "s", 0.5);
    mdp.add("q", "top", "r0", 0.5);
    mdp.add("r0", "top", "r0", 1.0);
    for (int j = 1; j <= 2 * n + 2; ++j) {
        mdp.add("r" + std::to_string(j), "top", "r" + std::to_string(j - 1), 1.0);
    }
    int r0 = mdp.state_index("r0");
    out.instance.agents = {{mdp.state_index("s"), {r0}},
                           {mdp.state_index("r" + std::to_string(2 * n + 2)), {r0}}};
    require_valid(out.instance, "memory-hierarchy corpus");

    // Countdown strategy: top everywhere, except bot at s once the counter
    // reaches 1; every departure from s decreases the counter.
    FiniteMemoryStrategy& sigma = out.countdown;
    for (int j = 1; j <= n + 1; ++j) sigma.mem.push_back(std::to_string(j));
    sigma.init_mem = n;  // the counter starts at n+1
    const int ns = mdp.num_states();
    const int top = mdp.action_index("top");
    const int bot = mdp.action_index("bot");
    sigma.next.assign(ns, std::vector<std::vector<ActionProb>>(n + 1));
    sigma.update.assign(ns, std::vector<std::vector<std::vector<MemProb>>>(n + 1));
    const int s_idx = mdp.state_index("s");
    for (int st = 0; st < ns; ++st) {
        const auto en = mdp.enabled(st);
        for (int m = 0; m <= n; ++m) {
            if (st == s_idx) {
                sigma.next[st][m] = {{(m == 0) ? bot : top, 1.0}};
            } else {
                sigma.next[st][m] = {{top, 1.0}};
            }
            sigma.update[st][m].resize(en.size());
            int next_mem = (st == s_idx) ? std::max(m - 1, 0) : m;
            for (std::size_t ei = 0; ei < en.size(); ++ei) {
                sigma.update[st][m][ei] = {{next_mem, 1.0}};
            }
        }
    }
    return out;
}

MsspInstance corpus_price_autonomy(double rho) {
    if (!(rho > 1.0)) throw Error("price-of-autonomy parameter rho must exceed 1");
    MsspInstance instance;
    Mdp& mdp = instance.mdp;
    mdp.states = {"i1", "i2", "Y", "L", "R", "tau"};
    mdp.actions = {"go", "l", "r"};
    mdp.init_table();
    const double inv = 1.0 / rho;
    const double inv2 = inv * inv;
    const double inv4 = inv2 * inv2;
    mdp.add("i1", "go", "L", 1.0 - inv);
    mdp.add("i1", "go", "R", inv);
    mdp.add("L", "go", "tau", inv2);
    mdp.add("L", "go", "L", 1.0 - inv2);
    mdp.add("R", "go", "tau", inv4);
    mdp.add("R", "go", "R", 1.0 - inv4);
    mdp.add("i2", "go", "Y", 1.0);
    mdp.add("Y", "l", "L", 1.0);
    mdp.add("Y", "r", "R", inv);
    mdp.add("Y", "r", "tau", 1.0 - inv);
    mdp.add("tau", "go", "tau", 1.0);
    int tau = mdp.state_index("tau");
    instance.agents = {{mdp.state_index("i1"), {tau}}, {mdp.state_index("i2"), {tau}}};
    require_valid(instance, "price-of-autonomy corpus");
    return instance;
}

ValidationReport validate_formula(const OneInThreeFormula& phi) {
    ValidationReport report;
    if (phi.n < 3) report.issues.push_back("formula needs n >= 3");
    if (static_cast<int>(phi.clauses.size()) != phi.n) {
        report.issues.push_back("formula needs exactly n clauses");
    }
    std::vector<int> occurrences(std::max(phi.n, 0), 0);
    for (const auto& clause : phi.clauses) {
        for (int v : clause) {
            if (v < 0 || v >= phi.n) {
                report.issues.push_back("clause variable index out of range");
                return report;
            }
            occurrences[v] += 1;
        }
        if (clause[0] == clause[1] || clause[0] == clause[2] || clause[1] == clause[2]) {
            report.issues.push_back("clause variables must be distinct");
        }
    }
    for (int v = 0; v < phi.n; ++v) {
        if (occurrences[v] != 3) {
            report.issues.push_back("variable x" + std::to_string(v) +
                                    " must occur in exactly three clauses");
        }
    }
    return report;
}

OneInThreeFormula formula_from_json(const nlohmann::json& j) {
    OneInThreeFormula phi;
    if (!j.contains("n") || !j.contains("clauses")) {
        throw Error("formula needs 'n' and 'clauses' fields");
    }
    phi.n = j.at("n").get<int>();
    for (const auto& clause : j.at("clauses")) {
        if (clause.size() != 3) throw Error("every clause needs exactly three variables");
        phi.clauses.push_back({clause[0].get<int>(), clause[1].get<int>(),
                               clause[2].get<int>()});
    }
    ValidationReport report = validate_formula(phi);
    if (!report.ok()) throw Error(report.issues.front());
    return phi;
}

nlohmann::json formula_to_json(const OneInThreeFormula& phi) {
    nlohmann::json clauses = nlohmann::json::array();
    for (const auto& clause : phi.clauses) {
        clauses.push_back({clause[0], clause[1], clause[2]});
    }
    return nlohmann::json{{"n", phi.n}, {"clauses", clauses}};
}

double bound_B(int n) {
    const double nd = n;
    const double n2 = nd * nd;
    const double n4 = n2 * n2;
    const double n5 = n4 * nd;
    const double n6 = n5 * nd;
    return (10240.0 * n6 + 5760.0 * n5 + 2944.0 * n4 - 96.0 * n2 + 60.0 * nd + 59.0) /
           (3840.0 * n5);
}

SatReduction gen_1in3(const OneInThreeFormula& phi) {
    ValidationReport formula_report = validate_formula(phi);
    if (!formula_report.ok()) throw Error(formula_report.issues.front());

    const int n = phi.n;
    SatReduction out;
    Mdp& mdp = out.instance.mdp;
    auto sp = [](int i, int b, int l) {
        return "sp_" + std::to_string(i) + "_" + std::to_string(b) + "_" +
               std::to_string(l);
    };
    auto spp = [](int i, int b, int l) {
        return "spp_" + std::to_string(i) + "_" + std::to_string(b) + "_" +
               std::to_string(l);
    };
    auto var_state = [](int i, int b) {
        return "v_" + std::to_string(i) + "_" + std::to_string(b);
    };
    auto clause_state = [](int j, int b, int l) {
        return "c_" + std::to_string(j) + "_" + std::to_string(b) + "_" +
               std::to_string(l);
    };

    mdp.states = {"tau", "sp", "spp", "g0", "g1",
                  "gp1", "gp2", "gp3", "gp4", "gp5", "gp6"};
    for (int i = 0; i < n; ++i) mdp.states.push_back("sp_" + std::to_string(i));
    for (int i = 0; i < n; ++i) mdp.states.push_back("spp_" + std::to_string(i));
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b <= 1; ++b) {
            for (int l = 0; l <= 8 * n - 1; ++l) mdp.states.push_back(sp(i, b, l));
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b <= 1; ++b) {
            for (int l = 0; l <= 8 * n - 1; ++l) mdp.states.push_back(spp(i, b, l));
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b <= 1; ++b) mdp.states.push_back(var_state(i, b));
    }
    for (int j = 0; j < n; ++j) {
        for (int b = 0; b <= 1; ++b) {
            for (int l = 0; l <= 8 * j; ++l) mdp.states.push_back(clause_state(j, b, l));
        }
    }
    mdp.actions = {"a", "a0", "a1"};
    mdp.init_table();

    // Gadget.
    mdp.add("tau", "a", "tau", 1.0);
    mdp.add("gp1", "a", "tau", 1.0);
    for (int l = 2; l <= 6; ++l) {
        mdp.add("gp" + std::to_string(l), "a", "gp" + std::to_string(l - 1), 1.0);
    }
    mdp.add("g0", "a", "tau", 0.5);
    mdp.add("g0", "a", "gp3", 0.5);
    mdp.add("g1", "a", "gp1", 0.9);
    mdp.add("g1", "a", "gp6", 0.1);

    const double fan = 1.0 / n;
    const double leak = 1.0 / (8.0 * n * n);
    for (int i = 0; i < n; ++i) {
        mdp.add("sp", "a", "sp_" + std::to_string(i), fan);
        mdp.add("spp", "a", "spp_" + std::to_string(i), fan);
        mdp.add("sp_" + std::to_string(i), "a0", sp(i, 0, 0), 1.0);
        mdp.add("sp_" + std::to_string(i), "a1", sp(i, 1, 0), 1.0);
        mdp.add("spp_" + std::to_string(i), "a0", spp(i, 0, 0), 1.0);
        mdp.add("spp_" + std::to_string(i), "a1", spp(i, 1, 0), 1.0);
        for (int b = 0; b <= 1; ++b) {
            // Agent 1 exits to g_b at the branch point; agent 2's entries are
            // swapped, which is what forces consistent strategies.
            const char* exit1 = (b == 0) ? "g0" : "g1";
            const char* exit2 = (b == 0) ? "g1" : "g0";
            for (int l = 0; l <= 8 * n - 2; ++l) {
                if (l == 8 * i) {
                    mdp.add(sp(i, b, l), "a", exit1, 1.0 - leak);
                    mdp.add(sp(i, b, l), "a", sp(i, b, l + 1), leak);
                    mdp.add(spp(i, b, l), "a", exit2, 1.0 - leak);
                    mdp.add(spp(i, b, l), "a", spp(i, b, l + 1), leak);
                } else {
                    mdp.add(sp(i, b, l), "a", sp(i, b, l + 1), 1.0);
                    mdp.add(spp(i, b, l), "a", spp(i, b, l + 1), 1.0);
                }
            }
            mdp.add(sp(i, b, 8 * n - 1), "a", var_state(i, b), 1.0);
            mdp.add(spp(i, b, 8 * n - 1), "a", var_state(i, b), 1.0);
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int b = 0; b <= 1; ++b) {
            for (int j = 0; j < n; ++j) {
                const auto& clause = phi.clauses[j];
                if (std::find(clause.begin(), clause.end(), i) != clause.end()) {
                    mdp.add(var_state(i, b), "a", clause_state(j, b, 0), 1.0 / 3.0);
                }
            }
        }
    }
    for (int j = 0; j < n; ++j) {
        for (int b = 0; b <= 1; ++b) {
            for (int l = 0; l <= 8 * j - 1; ++l) {
                mdp.add(clause_state(j, b, l), "a", clause_state(j, b, l + 1), 1.0);
            }
            mdp.add(clause_state(j, b, 8 * j), "a", (b == 0) ? "g0" : "g1", 1.0);
        }
    }

    int tau = mdp.state_index("tau");
    out.instance.agents = {{mdp.state_index("sp"), {tau}},
                           {mdp.state_index("spp"), {tau}}};
    require_valid(out.instance, "1-in-3 reduction");
    out.bound = bound_B(n);
    return out;
}

Profile sat_assignment_profile(const MsspInstance& instance,
                               const OneInThreeFormula& phi,
                               const std::vector<int>& assignment) {
    if (static_cast<int>(assignment.size()) != phi.n) {
        throw Error("assignment length must equal the number of variables");
    }
    const Mdp& mdp = instance.mdp;
    const int a0 = mdp.action_index("a0");
    const int a1 = mdp.action_index("a1");
    Profile pi;
    for (int agent = 0; agent < 2; ++agent) {
        std::vector<int> choice(mdp.num_states());
        for (int s = 0; s < mdp.num_states(); ++s) choice[s] = mdp.enabled(s).front();
        const char* prefix = (agent == 0) ? "sp_" : "spp_";
        for (int i = 0; i < phi.n; ++i) {
            int s = mdp.state_index(prefix + std::to_string(i));
            choice[s] = assignment[i] ? a1 : a0;
        }
        pi.strategies.emplace_back(MemorylessStrategy::deterministic(choice));
    }
    return pi;
}

} // namespace mssp
