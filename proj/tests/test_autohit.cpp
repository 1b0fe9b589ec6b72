#include <doctest.h>

#include "mssp/autohit.hpp"
#include "mssp/instances.hpp"
#include "mssp/profile_eval.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace mssp;
using namespace mssp::testing;

namespace {

/// Central finite differences of the truncated objective.
std::vector<double> fd_gradient(const MsspInstance& instance, const ParamVector& pv,
                                int gamma, double step) {
    std::vector<double> grad(pv.values.size());
    ParamVector probe = pv;
    for (std::size_t j = 0; j < pv.values.size(); ++j) {
        probe.values[j] = pv.values[j] + step;
        double up = objective(instance, probe, gamma);
        probe.values[j] = pv.values[j] - step;
        double down = objective(instance, probe, gamma);
        probe.values[j] = pv.values[j];
        grad[j] = (up - down) / (2.0 * step);
    }
    return grad;
}

void check_gradient(const MsspInstance& instance, const ParamVector& pv, int gamma) {
    std::vector<double> analytic = gradient(instance, pv, gamma);
    std::vector<double> numeric = fd_gradient(instance, pv, gamma, 1e-5);
    for (std::size_t j = 0; j < analytic.size(); ++j) {
        if (std::abs(analytic[j]) > 1e-8) {
            CHECK(std::abs(analytic[j] - numeric[j]) / std::abs(analytic[j]) <= 1e-4);
        }
    }
}

} // namespace

TEST_CASE("softmax of zero logits is uniform and saturates at (10, 0)") {
    MsspInstance instance = corpus_fig1();
    ParamVector pv = ParamVector::zeros(instance);
    Profile pi = softmax_profile(instance, pv);
    int s = instance.mdp.state_index("s");
    CHECK(pi.memoryless(0).decision[s][0].prob == doctest::Approx(0.5));
    CHECK(pi.memoryless(0).decision[s][1].prob == doctest::Approx(0.5));

    pv.values[pv.index(0, s, 0)] = 10.0;
    pv.values[pv.index(0, s, 1)] = 0.0;
    pi = softmax_profile(instance, pv);
    double expected = 1.0 / (1.0 + std::exp(-10.0));
    CHECK(pi.memoryless(0).decision[s][0].prob == doctest::Approx(expected).epsilon(1e-12));
    CHECK(pi.memoryless(0).decision[s][1].prob ==
          doctest::Approx(1.0 - expected).epsilon(1e-9));
}

TEST_CASE("softmax is invariant under shifting a state's logits") {
    MsspInstance instance = corpus_fig1();
    ParamVector zero = ParamVector::zeros(instance);
    ParamVector shifted = zero;
    int s = instance.mdp.state_index("s");
    shifted.values[shifted.index(0, s, 0)] = 3.0;
    shifted.values[shifted.index(0, s, 1)] = 3.0;
    Profile a = softmax_profile(instance, zero);
    Profile b = softmax_profile(instance, shifted);
    CHECK(a.memoryless(0).decision[s][0].prob == b.memoryless(0).decision[s][0].prob);
    CHECK(a.memoryless(0).decision[s][1].prob == b.memoryless(0).decision[s][1].prob);
}

TEST_CASE("softmax distributions are strictly positive and normalized") {
    Rng rng(89);
    MsspInstance instance = random_spine_instance(rng, 6, 2);
    ParamVector pv = init_params(InitScheme::Random, instance, nullptr, 5);
    Profile pi = softmax_profile(instance, pv);
    for (int i = 0; i < instance.num_agents(); ++i) {
        for (int s = 0; s < instance.mdp.num_states(); ++s) {
            double sum = 0.0;
            for (const auto& ap : pi.memoryless(i).decision[s]) {
                CHECK(ap.prob > 0.0);
                sum += ap.prob;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("objective equals truncated_mhit of the softmax profile bit for bit") {
    Rng rng(97);
    for (int round = 0; round < 10; ++round) {
        MsspInstance instance = random_spine_instance(rng, 5, 2);
        ParamVector pv = init_params(InitScheme::Random, instance, nullptr, round);
        int gamma = 1 + static_cast<int>(rng.next_below(10));
        CHECK(objective(instance, pv, gamma) ==
              truncated_mhit(instance, softmax_profile(instance, pv), gamma));
    }
}

TEST_CASE("objective is constant when every state has a single action") {
    Mdp mdp;
    mdp.states = {"x", "y", "t"};
    mdp.actions = {"a"};
    mdp.init_table();
    mdp.add("x", "a", "y", 1.0);
    mdp.add("y", "a", "t", 1.0);
    mdp.add("t", "a", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {2}}};
    ParamVector zero = ParamVector::zeros(instance);
    ParamVector other = zero;
    for (auto& v : other.values) v = 7.5;
    CHECK(objective(instance, zero, 5) == objective(instance, other, 5));
    std::vector<double> grad = gradient(instance, other, 5);
    for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("saturated fig1 logits reach the coordinated optimum") {
    MsspInstance instance = corpus_fig1();
    ParamVector pv = ParamVector::zeros(instance);
    int s = instance.mdp.state_index("s");
    pv.values[pv.index(0, s, 0)] = 20.0;   // agent 1 plays a
    pv.values[pv.index(0, s, 1)] = -20.0;
    pv.values[pv.index(1, s, 0)] = -20.0;  // agent 2 plays b
    pv.values[pv.index(1, s, 1)] = 20.0;
    CHECK(std::abs(objective(instance, pv, 10) - 1.5) <= 1e-4);
}

TEST_CASE("the uniform fig1 profile sits between the optimum and the worst pair") {
    MsspInstance instance = corpus_fig1();
    ParamVector pv = ParamVector::zeros(instance);
    double value = objective(instance, pv, 10);
    CHECK(value >= 1.5);
    CHECK(value <= 2.5);
    Profile uniform = softmax_profile(instance, pv);
    CHECK(value == doctest::Approx(exact_mhit_product(instance, uniform)).epsilon(1e-12));
}

TEST_CASE("gradients vanish on states unreachable within the horizon") {
    Mdp mdp;
    mdp.states = {"x", "t", "far"};
    mdp.actions = {"a", "b"};
    mdp.init_table();
    mdp.add("x", "a", "t", 1.0);
    mdp.add("x", "b", "t", 1.0);
    mdp.add("t", "a", "t", 1.0);
    mdp.add("far", "a", "x", 1.0);
    mdp.add("far", "b", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {1}}, {0, {1}}};
    Rng rng(101);
    ParamVector pv = init_params(InitScheme::Random, instance, nullptr, 3);
    std::vector<double> grad = gradient(instance, pv, 8);
    int far = mdp.state_index("far");
    for (int i = 0; i < 2; ++i) {
        CHECK(grad[pv.index(i, far, 0)] == 0.0);
        CHECK(grad[pv.index(i, far, 1)] == 0.0);
    }
}

TEST_CASE("analytic gradients match central differences") {
    Rng rng(103);
    for (int round = 0; round < 10; ++round) {
        MsspInstance instance =
            random_spine_instance(rng, 5, 2 + static_cast<int>(rng.next_below(2)));
        ParamVector pv = init_params(InitScheme::Random, instance, nullptr, round + 11);
        int gamma = 2 + static_cast<int>(rng.next_below(11));
        check_gradient(instance, pv, gamma);
    }
    check_gradient(corpus_fig1(), init_params(InitScheme::Random, corpus_fig1(),
                                              nullptr, 42), 7);
}

TEST_CASE("init_params is reproducible and honors the baseline boosts") {
    MsspInstance instance = corpus_fig1();
    ParamVector first = init_params(InitScheme::Random, instance, nullptr, 9);
    ParamVector second = init_params(InitScheme::Random, instance, nullptr, 9);
    CHECK(first.values == second.values);

    Profile baseline = lp_baseline(instance);
    int s = instance.mdp.state_index("s");
    CHECK(baseline.memoryless(0).dirac_action(s) == instance.mdp.action_index("a"));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        ParamVector pv = init_params(InitScheme::RandomizedLP, instance, &baseline, seed);
        for (int i = 0; i < 2; ++i) {
            CHECK(pv.values[pv.index(i, s, 0)] > pv.values[pv.index(i, s, 1)]);
        }
    }
}

TEST_CASE("init_params rejects baseline schemes without a baseline") {
    MsspInstance instance = corpus_fig1();
    CHECK_THROWS_AS(init_params(InitScheme::RandomizedLP, instance, nullptr, 1), Error);
}

TEST_CASE("shortest-path and optimal baselines coincide on a plain path") {
    Mdp mdp;
    mdp.states = {"x", "y", "t"};
    mdp.actions = {"a", "b"};
    mdp.init_table();
    mdp.add("x", "a", "y", 1.0);
    mdp.add("x", "b", "x", 1.0);
    mdp.add("y", "a", "t", 1.0);
    mdp.add("y", "b", "x", 1.0);
    mdp.add("t", "a", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {2}}};
    Profile lp = lp_baseline(instance);
    Profile sp = shortest_path_baseline(instance);
    for (int s = 0; s < mdp.num_states(); ++s) {
        CHECK(lp.memoryless(0).dirac_action(s) == sp.memoryless(0).dirac_action(s));
    }
    ParamVector via_lp = init_params(InitScheme::RandomizedLP, instance, &lp, 17);
    ParamVector via_sp =
        init_params(InitScheme::RandomizedShortestPath, instance, &sp, 17);
    CHECK(via_lp.values == via_sp.values);
}

TEST_CASE("optimizer_step is inert on zero gradients and solves the t=1 form") {
    std::vector<double> params{1.0, -2.0};
    AdamState state(2);
    optimizer_step(state, params, {0.0, 0.0}, 0.01, {0.9, 0.999}, 1e-8);
    CHECK(params == std::vector<double>{1.0, -2.0});

    // One step from a fresh state: -alpha * g / (|g| + eps) after bias correction.
    std::vector<double> theta{0.0};
    AdamState fresh(1);
    double g = 0.37;
    optimizer_step(fresh, theta, {g}, 0.01, {0.9, 0.999}, 1e-8);
    CHECK(theta[0] == doctest::Approx(-0.01 * g / (std::abs(g) + 1e-8)).epsilon(1e-12));
}

TEST_CASE("constant gradients drive the step magnitude to the step size") {
    std::vector<double> params{0.0};
    AdamState state(1);
    double previous = 0.0;
    double last_step = 0.0;
    for (int t = 0; t < 5000; ++t) {
        optimizer_step(state, params, {0.25}, 0.01, {0.9, 0.999}, 1e-8);
        last_step = params[0] - previous;
        previous = params[0];
    }
    CHECK(std::abs(last_step) == doctest::Approx(0.01).epsilon(0.05));
}

TEST_CASE("autohit is deterministic given the seed") {
    MsspInstance instance = corpus_fig1();
    Hyperparams hyper;
    hyper.steps = 40;
    hyper.seed = 12345;
    AutohitResult first = autohit(instance, hyper, InitScheme::Random);
    AutohitResult second = autohit(instance, hyper, InitScheme::Random);
    CHECK(first.params.values == second.params.values);
    CHECK(first.value == second.value);
}

TEST_CASE("autohit descends on fig1 and reaches the coordinated optimum") {
    MsspInstance instance = corpus_fig1();
    Hyperparams hyper;
    hyper.seed = 7;
    std::vector<TracePoint> trace;
    AutohitResult result = autohit(instance, hyper, InitScheme::Random, &trace);
    REQUIRE(trace.size() == static_cast<std::size_t>(hyper.steps) + 1);
    CHECK(trace.back().objective <= trace.front().objective);
    CHECK(result.value <= 1.5 + 1e-3);
    CHECK(result.value >= 1.5 - hyper.epsilon - 1e-10);
}

TEST_CASE("autohit returns an infinite value without throwing") {
    Mdp mdp;
    mdp.states = {"s", "t"};
    mdp.actions = {"stay"};
    mdp.init_table();
    mdp.add("s", "stay", "s", 1.0);
    mdp.add("t", "stay", "t", 1.0);
    MsspInstance instance;
    instance.mdp = mdp;
    instance.agents = {{0, {1}}};
    Hyperparams hyper;
    hyper.steps = 5;
    AutohitResult result = autohit(instance, hyper, InitScheme::Random);
    CHECK(std::isinf(result.value));
}

TEST_CASE("the default truncation length is the number of states") {
    MsspInstance instance = corpus_fig1();
    Hyperparams hyper;
    CHECK(hyper.resolved_gamma(instance) == instance.mdp.num_states());
    hyper.gamma = 3;
    CHECK(hyper.resolved_gamma(instance) == 3);
}
