#include <doctest.h>

#include "mssp/autohit.hpp"
#include "mssp/instances.hpp"
#include "mssp/profile_eval.hpp"
#include "mssp/ssp.hpp"
#include "test_support.hpp"

#include <cmath>

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

Profile randomized_profile(const MsspInstance& instance, double prob_a) {
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {}));
    MemorylessStrategy agent2 = pure(instance.mdp, {});
    int s2 = instance.mdp.state_index("s2");
    agent2.decision[s2] = {{instance.mdp.action_index("a"), prob_a},
                           {instance.mdp.action_index("b"), 1.0 - prob_a}};
    pi.strategies.emplace_back(std::move(agent2));
    return pi;
}

} // namespace

TEST_CASE("build_abar leaves an already-absorbing single target unchanged") {
    MsspInstance instance = corpus_fig1();
    MemorylessStrategy sigma = pure(instance.mdp, {{"s", "b"}});
    MarkovChain chain = induced_chain(instance.mdp, sigma);
    AbsorbedChain ac =
        build_abar(instance.mdp, sigma, {instance.mdp.state_index("tau")});
    CHECK((ac.chain.matrix - chain.matrix).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ac.sink == instance.mdp.state_index("tau"));
}

TEST_CASE("build_abar merges all target mass into the first target") {
    Mdp mdp;
    mdp.states = {"s", "t1", "t2", "u"};
    mdp.actions = {"a"};
    mdp.init_table();
    mdp.add("s", "a", "t1", 0.3);
    mdp.add("s", "a", "t2", 0.3);
    mdp.add("s", "a", "u", 0.4);
    mdp.add("t1", "a", "s", 1.0);
    mdp.add("t2", "a", "s", 1.0);
    mdp.add("u", "a", "u", 1.0);
    AbsorbedChain ac = build_abar(mdp, pure(mdp, {}), {2, 1});
    CHECK(ac.sink == 1);
    CHECK(ac.chain.matrix(0, 1) == doctest::Approx(0.6));
    CHECK(ac.chain.matrix(0, 2) == 0.0);
    // Target rows become identity rows.
    CHECK(ac.chain.matrix(1, 1) == 1.0);
    CHECK(ac.chain.matrix(2, 2) == 1.0);
    CHECK(ac.chain.matrix(1, 0) == 0.0);
}

TEST_CASE("two-step absorption probability of the randomized corpus") {
    MsspInstance instance = corpus_randomized();
    AbsorbedChain ac = build_abar(instance.mdp, pure(instance.mdp, {{"s2", "b"}}),
                                  {instance.mdp.state_index("tau")});
    CHECK(hit_cdf(ac, instance.mdp.state_index("s2"), 2) ==
          doctest::Approx(9.0 / 26.0).epsilon(1e-12));
}

TEST_CASE("hit_cdf of the gadget reproduces the exact step counts") {
    Mdp gadget = corpus_gadget();
    AbsorbedChain ac = build_abar(gadget, pure(gadget, {}), {gadget.state_index("tau")});
    int g0 = gadget.state_index("g0");
    int g1 = gadget.state_index("g1");
    CHECK(hit_cdf(ac, g0, 0) == 0.0);
    CHECK(hit_cdf(ac, g0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit_cdf(ac, g0, 2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit_cdf(ac, g0, 4) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hit_cdf(ac, g1, 2) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(hit_cdf(ac, g1, 6) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(hit_cdf(ac, g1, 7) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hit_cdf tails are nonincreasing") {
    Rng rng(37);
    for (int round = 0; round < 20; ++round) {
        MsspInstance instance = random_spine_instance(rng, 6, 1);
        AbsorbedChain ac = build_abar(instance.mdp, random_strategy(rng, instance.mdp),
                                      instance.agents[0].targets);
        auto cdf = hit_cdf_prefix(ac, instance.agents[0].init, 30);
        for (std::size_t m = 1; m < cdf.size(); ++m) {
            CHECK(cdf[m] >= cdf[m - 1] - 1e-12);
        }
    }
}

TEST_CASE("truncated_mhit at gamma 1 is exactly 1") {
    MsspInstance instance = corpus_fig1();
    CHECK(truncated_mhit(instance, fig1_profile(instance, "a", "b"), 1) == 1.0);
}

TEST_CASE("truncated_mhit of the fig1 profiles stabilizes at the exact values") {
    MsspInstance instance = corpus_fig1();
    CHECK(truncated_mhit(instance, fig1_profile(instance, "a", "b"), 10) ==
          doctest::Approx(1.5).epsilon(1e-12));
    CHECK(truncated_mhit(instance, fig1_profile(instance, "b", "b"), 10) ==
          doctest::Approx(1.75).epsilon(1e-12));
}

TEST_CASE("truncated_mhit rejects finite-memory strategies") {
    MemoryHierarchy mh = corpus_memory_hierarchy(1);
    Profile pi;
    pi.strategies.emplace_back(mh.countdown);
    pi.strategies.emplace_back(mh.countdown);
    CHECK_THROWS_AS(truncated_mhit(mh.instance, pi, 5), Error);
}

TEST_CASE("truncation is monotone in gamma and below the exact value") {
    Rng rng(41);
    for (int round = 0; round < 15; ++round) {
        MsspInstance instance = random_spine_instance(rng, 5, 2);
        Profile pi;
        for (int i = 0; i < 2; ++i) {
            pi.strategies.emplace_back(random_strategy(rng, instance.mdp));
        }
        double exact = exact_mhit_product(instance, pi);
        double previous = 0.0;
        for (int gamma = 1; gamma <= 40; ++gamma) {
            double truncated = truncated_mhit(instance, pi, gamma);
            CHECK(truncated >= previous - 1e-10);
            CHECK(truncated <= exact + 1e-10);
            previous = truncated;
        }
    }
}

TEST_CASE("gamma_eps ends at the path length for deterministic agents") {
    // Agent with a deterministic 3-step path: the tail vanishes at rho = 3.
    Mdp mdp;
    mdp.states = {"x0", "x1", "x2", "t"};
    mdp.actions = {"a"};
    mdp.init_table();
    mdp.add("x0", "a", "x1", 1.0);
    mdp.add("x1", "a", "x2", 1.0);
    mdp.add("x2", "a", "t", 1.0);
    mdp.add("t", "a", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {3}}};
    Profile pi;
    pi.strategies.emplace_back(pure(mdp, {}));
    TruncationBound tb = gamma_eps(instance, pi, 1e-9);
    CHECK(tb.rho == 3);
    CHECK(tb.bound <= 1e-9);
    CHECK(truncated_mhit(instance, pi, tb.rho) == doctest::Approx(3.0));
}

TEST_CASE("gamma_eps on fig1 both-b reaches the exact value at rho 4") {
    MsspInstance instance = corpus_fig1();
    Profile pi = fig1_profile(instance, "b", "b");
    TruncationBound tb = gamma_eps(instance, pi, 1e-9);
    CHECK(tb.rho == 4);
    double exact = exact_mhit_product(instance, pi);
    CHECK(exact - truncated_mhit(instance, pi, tb.rho) <= 1e-9);
    CHECK(exact - truncated_mhit(instance, pi, tb.rho) >= -1e-12);
}

TEST_CASE("gamma_eps admits rho 1 when epsilon dominates the expectation") {
    MsspInstance instance = corpus_fig1();
    instance.agents.resize(1);
    Profile pi;
    pi.strategies.emplace_back(pure(instance.mdp, {{"s", "b"}}));
    TruncationBound tb = gamma_eps(instance, pi, 3.0);  // E = 2.5 < 1 + eps
    CHECK(tb.rho == 1);
}

TEST_CASE("the truncation bound certificate recomputes from its parts") {
    MsspInstance instance = corpus_fig1();
    Profile pi = fig1_profile(instance, "b", "b");
    TruncationBound tb = gamma_eps(instance, pi, 1e-3);
    REQUIRE(tb.witness_agent >= 0);
    int i = tb.witness_agent;
    EvalResult ei = eval_strategy(instance.mdp, pi.memoryless(i),
                                  instance.agents[i].init, instance.agents[i].targets);
    REQUIRE(ei.status == Finiteness::Finite);
    AbsorbedChain aci = build_abar(instance.mdp, pi.memoryless(i),
                                   instance.agents[i].targets);
    auto cdf_i = hit_cdf_prefix(aci, instance.agents[i].init, tb.rho);
    double partial = 0.0;
    for (int l = 1; l <= tb.rho; ++l) partial += 1.0 - cdf_i[l - 1];
    double delta = ei.value - partial;
    double others = 1.0;
    for (int j = 0; j < instance.num_agents(); ++j) {
        if (j == i) continue;
        AbsorbedChain acj = build_abar(instance.mdp, pi.memoryless(j),
                                       instance.agents[j].targets);
        others *= 1.0 - hit_cdf(acj, instance.agents[j].init, tb.rho);
    }
    CHECK(tb.bound == doctest::Approx(std::max(delta, 0.0) * others).epsilon(1e-12));
}

TEST_CASE("gamma_eps fails when no agent hits almost surely") {
    Mdp mdp;
    mdp.states = {"s", "t"};
    mdp.actions = {"stay", "go"};
    mdp.init_table();
    mdp.add("s", "stay", "s", 1.0);
    mdp.add("s", "go", "t", 1.0);
    mdp.add("t", "stay", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {1}}, {0, {1}}};
    Profile pi;
    pi.strategies.emplace_back(pure(mdp, {{"s", "stay"}}));
    pi.strategies.emplace_back(pure(mdp, {{"s", "stay"}}));
    CHECK_THROWS_AS(gamma_eps(instance, pi, 1e-6), Error);
    CHECK(std::isinf(evaluate(instance, pi, 1e-6)));
}

TEST_CASE("evaluate reproduces the fig1 and randomized-profile values") {
    MsspInstance fig1 = corpus_fig1();
    CHECK(evaluate(fig1, fig1_profile(fig1, "a", "b"), 1e-9) ==
          doctest::Approx(1.5).epsilon(1e-8));

    MsspInstance randomized = corpus_randomized();
    double pure_b = evaluate(randomized, randomized_profile(randomized, 0.0), 1e-6);
    CHECK(std::abs(pure_b - 3.30769231) <= 1e-6 + 1e-10);
    double mixed = evaluate(randomized, randomized_profile(randomized, 0.2626), 1e-6);
    CHECK(std::abs(mixed - 3.29972213) <= 1e-6 + 1e-10);
}

TEST_CASE("the exact product oracle matches eval_strategy for one agent") {
    Rng rng(43);
    for (int round = 0; round < 20; ++round) {
        MsspInstance instance = random_spine_instance(rng, 6, 1);
        MemorylessStrategy sigma = random_strategy(rng, instance.mdp);
        Profile pi;
        pi.strategies.emplace_back(sigma);
        EvalResult eval = eval_strategy(instance.mdp, sigma, instance.agents[0].init,
                                        instance.agents[0].targets);
        double oracle = exact_mhit_product(instance, pi);
        if (eval.status == Finiteness::Finite) {
            CHECK(oracle == doctest::Approx(eval.value).epsilon(1e-10));
        } else {
            CHECK(std::isinf(oracle));
        }
    }
}

TEST_CASE("the exact product oracle reproduces the paper pair values") {
    MsspInstance fig1 = corpus_fig1();
    CHECK(exact_mhit_product(fig1, fig1_profile(fig1, "b", "b")) ==
          doctest::Approx(1.75).epsilon(1e-10));

    MsspInstance pair = gadget_pair("g0", "g1");
    Profile pi;
    pi.strategies.emplace_back(pure(pair.mdp, {}));
    pi.strategies.emplace_back(pure(pair.mdp, {}));
    CHECK(exact_mhit_product(pair, pi) == doctest::Approx(1.6).epsilon(1e-10));
}

TEST_CASE("the exact product oracle refuses oversized products") {
    MsspInstance fig1 = corpus_fig1();
    CHECK_THROWS_AS(exact_mhit_product(fig1, fig1_profile(fig1, "b", "b"), 10), Error);
}

TEST_CASE("evaluate stays within epsilon of the exact oracle") {
    Rng rng(47);
    for (int round = 0; round < 25; ++round) {
        MsspInstance instance = random_spine_instance(rng, 6, 2 + (round % 2));
        Profile pi;
        for (int i = 0; i < instance.num_agents(); ++i) {
            pi.strategies.emplace_back(random_strategy(rng, instance.mdp));
        }
        double exact = exact_mhit_product(instance, pi);
        double approx = evaluate(instance, pi, 1e-9);
        REQUIRE(std::isfinite(exact));
        CHECK(exact - approx >= -1e-10);
        CHECK(exact - approx <= 1e-9 + 1e-10);
    }
}

TEST_CASE("shared chains make the survival product a power") {
    MsspInstance instance = corpus_fig1();
    instance.agents = {instance.agents[0], instance.agents[0], instance.agents[0]};
    Profile pi;
    for (int i = 0; i < 3; ++i) {
        pi.strategies.emplace_back(pure(instance.mdp, {{"s", "b"}}));
    }
    AbsorbedChain ac = build_abar(instance.mdp, pi.memoryless(0),
                                  instance.agents[0].targets);
    auto cdf = hit_cdf_prefix(ac, instance.agents[0].init, 9);
    double expected = 0.0;
    for (int l = 1; l <= 10; ++l) {
        double survival = 1.0 - cdf[l - 1];
        expected += survival * survival * survival;
    }
    CHECK(std::abs(truncated_mhit(instance, pi, 10) - expected) <= 1e-12);
}
