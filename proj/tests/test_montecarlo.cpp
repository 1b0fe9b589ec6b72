#include <doctest.h>

#include "mssp/coorhit.hpp"
#include "mssp/instances.hpp"
#include "mssp/montecarlo.hpp"
#include "mssp/profile_eval.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace mssp;
using namespace mssp::testing;

namespace {

MsspInstance path_instance(int length) {
    MsspInstance instance;
    Mdp& mdp = instance.mdp;
    for (int i = 0; i <= length; ++i) mdp.states.push_back("p" + std::to_string(i));
    mdp.actions = {"a"};
    mdp.init_table();
    for (int i = 0; i < length; ++i) mdp.add(i, 0, i + 1, 1.0);
    mdp.add(length, 0, length, 1.0);
    instance.agents = {{0, {length}}};
    return instance;
}

Profile fig1_profile(const MsspInstance& instance, const std::string& first,
                     const std::string& second) {
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {{"s", first}}));
    pi.strategies.emplace_back(pure(instance.mdp, {{"s", second}}));
    return pi;
}

} // namespace

TEST_CASE("a deterministic path is estimated exactly") {
    MsspInstance instance = path_instance(3);
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {}));
    SimConfig cfg;
    cfg.runs = 200;
    cfg.seed = 1;
    SimResult result = simulate_profile(instance, pi, cfg);
    REQUIRE(result.usable);
    CHECK(result.mean == 3.0);
    CHECK(result.half_width == 0.0);
    CHECK(result.censored == 0);
}

TEST_CASE("fig1 and gadget estimates cover the exact values") {
    MsspInstance fig1 = corpus_fig1();
    SimConfig cfg;
    cfg.runs = 100000;
    cfg.seed = 2024;
    SimResult result = simulate_profile(fig1, fig1_profile(fig1, "a", "b"), cfg);
    REQUIRE(result.usable);
    CHECK(std::abs(result.mean - 1.5) <= result.half_width);
    CHECK(result.half_width <= 0.01);

    MsspInstance pair = gadget_pair("g0", "g1");
    Profile pi;
    pi.strategies.emplace_back(pure(pair.mdp, {}));
    pi.strategies.emplace_back(pure(pair.mdp, {}));
    SimResult gadget_result = simulate_profile(pair, pi, cfg);
    CHECK(std::abs(gadget_result.mean - 1.6) <= gadget_result.half_width);
}

TEST_CASE("finite-memory strategies are simulated natively") {
    MemoryHierarchy mh = corpus_memory_hierarchy(1);
    Profile pi;
    pi.strategies.emplace_back(mh.countdown);
    pi.strategies.emplace_back(mh.countdown);
    SimConfig cfg;
    cfg.runs = 200000;
    cfg.seed = 77;
    SimResult result = simulate_profile(mh.instance, pi, cfg);
    REQUIRE(result.usable);
    CHECK(std::abs(result.mean - 2.875) <= result.half_width);
}

TEST_CASE("a unit horizon censors every run of a two-step instance") {
    MsspInstance instance = path_instance(2);
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {}));
    SimConfig cfg;
    cfg.runs = 50;
    cfg.horizon = 1;
    SimResult result = simulate_profile(instance, pi, cfg);
    CHECK_FALSE(result.usable);
    CHECK(result.censored == 50);
}

TEST_CASE("raising the horizon never increases the censored count") {
    MsspInstance instance = corpus_randomized();
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {}));
    pi.strategies.emplace_back(pure(instance.mdp, {{"s2", "a"}}));
    SimConfig cfg;
    cfg.runs = 2000;
    cfg.seed = 5;
    std::int64_t previous = cfg.runs + 1;
    for (std::int64_t horizon : {1, 2, 3, 5, 8, 20}) {
        cfg.horizon = horizon;
        SimResult result = simulate_profile(instance, pi, cfg);
        CHECK(result.censored <= previous);
        previous = result.censored;
    }
}

TEST_CASE("per-run substreams make the sampler deterministic") {
    MsspInstance fig1 = corpus_fig1();
    SimConfig cfg;
    cfg.runs = 5000;
    cfg.seed = 31;
    std::vector<std::int64_t> first, second;
    simulate_profile(fig1, fig1_profile(fig1, "b", "b"), cfg, &first);
    simulate_profile(fig1, fig1_profile(fig1, "b", "b"), cfg, &second);
    CHECK(first == second);
}

TEST_CASE("the coordinated sampler covers the optimal fig1 value") {
    MsspInstance fig1 = corpus_fig1();
    CoordResult optimal = solve_coordinated(fig1);
    SimConfig cfg;
    cfg.runs = 100000;
    cfg.seed = 99;
    SimResult result = simulate_coordinated(fig1, optimal.strategy, cfg);
    REQUIRE(result.usable);
    CHECK(std::abs(result.mean - 1.5) <= result.half_width);

    CoordStrategy undefined;
    CHECK_THROWS_AS(simulate_coordinated(fig1, undefined, cfg), Error);
}

TEST_CASE("simulated means agree with the exact evaluator across seeds") {
    MsspInstance fig1 = corpus_fig1();
    Profile pi = fig1_profile(fig1, "b", "b");
    double exact = exact_mhit_product(fig1, pi);
    SimConfig cfg;
    cfg.runs = 20000;
    int covered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.seed = seed;
        SimResult result = simulate_profile(fig1, pi, cfg);
        if (std::abs(result.mean - exact) <= result.half_width) ++covered;
    }
    CHECK(covered >= 19);
}

TEST_CASE("normal_quantile hits the standard table values") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-7));
    CHECK(normal_quantile(0.995) == doctest::Approx(2.575829304).epsilon(1e-7));
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
}

TEST_CASE("the coordinated sampler is exact on product paths and censors cleanly") {
    MsspInstance instance = path_instance(2);
    instance.agents.push_back(instance.agents[0]);
    CoordStrategy cs;
    cs.decision[{0, 0}] = {0, 0};
    cs.decision[{1, 1}] = {0, 0};
    SimConfig cfg;
    cfg.runs = 100;
    cfg.seed = 8;
    SimResult result = simulate_coordinated(instance, cs, cfg);
    REQUIRE(result.usable);
    CHECK(result.mean == 2.0);
    CHECK(result.half_width == 0.0);

    cfg.horizon = 1;
    SimResult censored = simulate_coordinated(instance, cs, cfg);
    CHECK_FALSE(censored.usable);
    CHECK(censored.censored == 100);
}
