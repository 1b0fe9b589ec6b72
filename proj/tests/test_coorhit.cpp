#include <doctest.h>

#include "mssp/coorhit.hpp"
#include "mssp/instances.hpp"
#include "mssp/profile_eval.hpp"
#include "mssp/ssp.hpp"
#include "test_support.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

using namespace mssp;
using namespace mssp::testing;

namespace {

Profile fig1_profile(const MsspInstance& instance, const std::string& first,
                     const std::string& second) {
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {{"s", first}}));
    pi.strategies.emplace_back(pure(instance.mdp, {{"s", second}}));
    return pi;
}

/// All product tuples reachable from the start under arbitrary actions,
/// with target tuples treated as absorbing.
std::vector<std::vector<int>> reachable_tuples(const MsspInstance& instance,
                                               std::vector<char>* target_flags) {
    const int k = instance.num_agents();
    std::vector<std::vector<char>> target(k,
                                          std::vector<char>(instance.mdp.num_states(), 0));
    for (int i = 0; i < k; ++i) {
        for (int t : instance.agents[i].targets) target[i][t] = 1;
    }
    auto is_target = [&](const std::vector<int>& tuple) {
        for (int i = 0; i < k; ++i) {
            if (target[i][tuple[i]]) return true;
        }
        return false;
    };
    std::map<std::vector<int>, int> seen;
    std::vector<std::vector<int>> tuples;
    std::deque<std::vector<int>> queue;
    std::vector<int> init(k);
    for (int i = 0; i < k; ++i) init[i] = instance.agents[i].init;
    seen[init] = 0;
    tuples.push_back(init);
    queue.push_back(init);
    while (!queue.empty()) {
        std::vector<int> tuple = queue.front();
        queue.pop_front();
        if (is_target(tuple)) continue;
        std::vector<std::vector<int>> acts(k);
        for (int i = 0; i < k; ++i) acts[i] = instance.mdp.enabled(tuple[i]);
        std::vector<int> pick(k, 0);
        while (true) {
            std::vector<int> succ(k);
            auto expand = [&](auto&& self, int agent) -> void {
                if (agent == k) {
                    if (seen.try_emplace(succ, static_cast<int>(tuples.size())).second) {
                        tuples.push_back(succ);
                        queue.push_back(succ);
                    }
                    return;
                }
                for (const auto& tr :
                     instance.mdp.trans[tuple[agent]][acts[agent][pick[agent]]]) {
                    succ[agent] = tr.to;
                    self(self, agent + 1);
                }
            };
            expand(expand, 0);
            int i = 0;
            while (i < k) {
                if (++pick[i] < static_cast<int>(acts[i].size())) break;
                pick[i] = 0;
                ++i;
            }
            if (i == k) break;
        }
    }
    if (target_flags != nullptr) {
        target_flags->clear();
        for (const auto& tuple : tuples) {
            target_flags->push_back(is_target(tuple) ? 1 : 0);
        }
    }
    return tuples;
}

} // namespace

TEST_CASE("build_product of fig1 with two agents has 49 states") {
    MsspInstance instance = corpus_fig1();
    ProductInstance product = build_product(instance);
    CHECK(product.mdp.num_states() == 49);
    CHECK(product.mdp.num_actions() == 4);
    CHECK(validate_mdp(product.mdp).ok());
    // Targets are exactly the tuples with some component in its target set.
    int tau = instance.mdp.state_index("tau");
    int hits = 0;
    for (int flat = 0; flat < product.mdp.num_states(); ++flat) {
        auto tuple = product.tuple_of(flat);
        bool expect = tuple[0] == tau || tuple[1] == tau;
        CHECK(static_cast<bool>(product.target[flat]) == expect);
        hits += product.target[flat];
    }
    CHECK(hits == 13);
}

TEST_CASE("build_product with one agent is isomorphic to the original") {
    MsspInstance instance = corpus_fig1();
    instance.agents.resize(1);
    ProductInstance product = build_product(instance);
    REQUIRE(product.mdp.num_states() == instance.mdp.num_states());
    REQUIRE(product.mdp.num_actions() == instance.mdp.num_actions());
    for (int s = 0; s < product.mdp.num_states(); ++s) {
        for (int a = 0; a < product.mdp.num_actions(); ++a) {
            REQUIRE(product.mdp.trans[s][a].size() == instance.mdp.trans[s][a].size());
            for (std::size_t e = 0; e < product.mdp.trans[s][a].size(); ++e) {
                CHECK(product.mdp.trans[s][a][e].to == instance.mdp.trans[s][a][e].to);
                CHECK(product.mdp.trans[s][a][e].prob ==
                      instance.mdp.trans[s][a][e].prob);
            }
        }
    }
}

TEST_CASE("build_product refuses oversized products") {
    MsspInstance instance = corpus_fig1();
    CHECK_THROWS_WITH_AS(build_product(instance, 10),
                         doctest::Contains("product too large"), Error);
}

TEST_CASE("a target set covering everything but the start forces a 1-step hit") {
    Mdp mdp;
    mdp.states = {"s", "u", "v"};
    mdp.actions = {"a"};
    mdp.init_table();
    mdp.add("s", "a", "u", 0.5);
    mdp.add("s", "a", "v", 0.5);
    mdp.add("u", "a", "u", 1.0);
    mdp.add("v", "a", "v", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {1, 2}}, {0, {1, 2}}};
    CoordResult result = solve_coordinated(instance);
    REQUIRE(result.status == Finiteness::Finite);
    CHECK(result.value == doctest::Approx(1.0));
}

TEST_CASE("CoorHit reproduces the fig1 values") {
    MsspInstance instance = corpus_fig1();
    CoordResult two = solve_coordinated(instance);
    REQUIRE(two.status == Finiteness::Finite);
    CHECK(two.value == doctest::Approx(1.5).epsilon(1e-10));

    // The optimal start decision sends one agent along a and the other along b.
    int s = instance.mdp.state_index("s");
    auto it = two.strategy.decision.find({s, s});
    REQUIRE(it != two.strategy.decision.end());
    int a = instance.mdp.action_index("a");
    int b = instance.mdp.action_index("b");
    bool ab = it->second == std::vector<int>{a, b};
    bool ba = it->second == std::vector<int>{b, a};
    CHECK((ab || ba));

    MsspInstance single = instance;
    single.agents.resize(1);
    CoordResult one = solve_coordinated(single);
    CHECK(one.value == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("CoorHit on the gadget pair starting at g0 twice") {
    MsspInstance instance = gadget_pair("g0", "g0");
    CoordResult result = solve_coordinated(instance);
    CHECK(result.value == doctest::Approx(1.75).epsilon(1e-10));
}

TEST_CASE("coord_value certifies the solver and evaluates embedded profiles") {
    MsspInstance instance = corpus_fig1();
    CoordResult optimal = solve_coordinated(instance);
    CHECK(coord_value(instance, optimal.strategy) ==
          doctest::Approx(optimal.value).epsilon(1e-8));

    CHECK(coord_value(instance, embed_profile(instance, fig1_profile(instance, "a", "a"))) ==
          doctest::Approx(2.0).epsilon(1e-10));
    CHECK(coord_value(instance, embed_profile(instance, fig1_profile(instance, "b", "b"))) ==
          doctest::Approx(1.75).epsilon(1e-10));
}

TEST_CASE("coord_value rejects strategies undefined on reachable tuples") {
    MsspInstance instance = corpus_fig1();
    CoordStrategy empty;
    CHECK_THROWS_AS(coord_value(instance, empty), Error);
}

TEST_CASE("embedded deterministic profiles preserve the profile value") {
    Rng rng(53);
    for (int round = 0; round < 20; ++round) {
        MsspInstance instance = random_spine_instance(rng, 5, 2);
        std::vector<int> choice1(instance.mdp.num_states());
        std::vector<int> choice2(instance.mdp.num_states());
        for (int s = 0; s < instance.mdp.num_states(); ++s) {
            auto en = instance.mdp.enabled(s);
            choice1[s] = en[rng.next_below(en.size())];
            choice2[s] = en[rng.next_below(en.size())];
        }
        Profile pi;
        pi.strategies.emplace_back(MemorylessStrategy::deterministic(choice1));
        pi.strategies.emplace_back(MemorylessStrategy::deterministic(choice2));
        double direct = exact_mhit_product(instance, pi);
        double embedded = coord_value(instance, embed_profile(instance, pi));
        if (std::isinf(direct)) {
            CHECK(std::isinf(embedded));
        } else {
            CHECK(embedded == doctest::Approx(direct).epsilon(1e-8));
        }
    }
}

TEST_CASE("the coordinated optimum lower-bounds every autonomous profile") {
    Rng rng(59);
    for (int round = 0; round < 15; ++round) {
        MsspInstance instance = random_spine_instance(rng, 5, 2);
        CoordResult optimal = solve_coordinated(instance);
        Profile pi;
        for (int i = 0; i < 2; ++i) {
            pi.strategies.emplace_back(random_strategy(rng, instance.mdp));
        }
        double autonomous = exact_mhit_product(instance, pi);
        if (optimal.status == Finiteness::Finite) {
            CHECK(optimal.value <= autonomous + 1e-8);
        } else {
            CHECK(std::isinf(autonomous));
        }
    }
}

TEST_CASE("CoorHit matches exhaustive coordinated enumeration on tiny instances") {
    Rng rng(61);
    int checked = 0;
    for (int round = 0; round < 60 && checked < 12; ++round) {
        MsspInstance instance = random_spine_instance(rng, 4, 2);
        std::vector<char> target_flags;
        auto tuples = reachable_tuples(instance, &target_flags);
        std::vector<std::vector<int>> free_tuples;
        for (std::size_t idx = 0; idx < tuples.size(); ++idx) {
            if (!target_flags[idx]) free_tuples.push_back(tuples[idx]);
        }
        if (free_tuples.size() > 7) continue;
        ++checked;

        // Exhaustive minimum over deterministic memoryless coordinated
        // strategies restricted to the reachable tuples.
        std::vector<std::vector<std::vector<int>>> options(free_tuples.size());
        for (std::size_t idx = 0; idx < free_tuples.size(); ++idx) {
            const auto& tuple = free_tuples[idx];
            std::vector<std::vector<int>> acts(2);
            for (int i = 0; i < 2; ++i) acts[i] = instance.mdp.enabled(tuple[i]);
            for (int a0 : acts[0]) {
                for (int a1 : acts[1]) options[idx].push_back({a0, a1});
            }
        }
        double best = std::numeric_limits<double>::infinity();
        std::vector<int> pick(free_tuples.size(), 0);
        while (true) {
            CoordStrategy cs;
            for (std::size_t idx = 0; idx < free_tuples.size(); ++idx) {
                cs.decision[free_tuples[idx]] = options[idx][pick[idx]];
            }
            double value = coord_value(instance, cs);
            if (value < best) best = value;
            std::size_t idx = 0;
            while (idx < free_tuples.size()) {
                if (++pick[idx] < static_cast<int>(options[idx].size())) break;
                pick[idx] = 0;
                ++idx;
            }
            if (idx == free_tuples.size()) break;
        }

        CoordResult solved = solve_coordinated(instance);
        if (solved.status == Finiteness::Finite) {
            CHECK(solved.value == doctest::Approx(best).epsilon(1e-8));
        } else {
            CHECK(std::isinf(best));
        }
    }
    CHECK(checked >= 5);
}
