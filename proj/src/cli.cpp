#include "mssp/cli.hpp"

#include "mssp/autohit.hpp"
#include "mssp/bench.hpp"
#include "mssp/coorhit.hpp"
#include "mssp/instances.hpp"
#include "mssp/json_io.hpp"
#include "mssp/memory_lift.hpp"
#include "mssp/montecarlo.hpp"
#include "mssp/profile_eval.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace mssp {

namespace {

std::string fmt_value(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

InitScheme parse_scheme(const std::string& name) {
    if (name == "random") return InitScheme::Random;
    if (name == "rlp") return InitScheme::RandomizedLP;
    if (name == "rsp") return InitScheme::RandomizedShortestPath;
    throw Error("unknown init scheme '" + name + "' (expected random, rlp or rsp)");
}

MsspInstance corpus_by_name(const std::string& name) {
    if (name == "fig1") return corpus_fig1();
    if (name == "gadget") return gadget_pair("g0", "g1");
    if (name == "randomized") return corpus_randomized();
    if (name.rfind("memory:", 0) == 0) {
        return corpus_memory_hierarchy(std::stoi(name.substr(7))).instance;
    }
    if (name.rfind("price:", 0) == 0) {
        return corpus_price_autonomy(std::stod(name.substr(6)));
    }
    throw Error("unknown corpus name '" + name +
                "' (expected fig1, gadget, randomized, memory:N or price:RHO)");
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file '" + path + "'");
    return out;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"Multiagent stochastic shortest path toolkit"};
    app.require_subcommand(1);

    // coorhit
    auto* coorhit_cmd =
        app.add_subcommand("coorhit", "Optimal coordinated expected hitting time");
    std::string coorhit_instance;
    std::string coorhit_strategy_out;
    std::int64_t coorhit_cap = -1;  // -1: use MSSP_PRODUCT_CAP or the default
    coorhit_cmd->add_option("instance", coorhit_instance, "instance JSON")->required();
    coorhit_cmd->add_option("--strategy", coorhit_strategy_out,
                            "write the product strategy as JSON");
    coorhit_cmd->add_option("--cap", coorhit_cap, "product state cap");

    // autohit
    auto* autohit_cmd =
        app.add_subcommand("autohit", "Gradient-based autonomous profile synthesis");
    std::string autohit_instance, autohit_init = "random", autohit_trace,
                autohit_profile_out;
    Hyperparams hyper;
    double gamma_ratio = 0.0;
    autohit_cmd->add_option("instance", autohit_instance, "instance JSON")->required();
    autohit_cmd->add_option("--init", autohit_init, "init scheme: random, rlp or rsp");
    autohit_cmd->add_option("--steps", hyper.steps, "optimizer steps");
    auto* gamma_opt = autohit_cmd->add_option("--gamma", hyper.gamma,
                                              "truncation length (default: |S|)");
    autohit_cmd->add_option("--gamma-ratio", gamma_ratio,
                            "truncation length as a multiple of |S|")
        ->excludes(gamma_opt);
    autohit_cmd->add_option("--epsilon", hyper.epsilon, "final evaluation precision");
    autohit_cmd->add_option("--seed", hyper.seed, "random seed");
    autohit_cmd->add_option("--step-size", hyper.step_size, "optimizer step size");
    autohit_cmd->add_option("--trace", autohit_trace, "write per-step objective CSV");
    autohit_cmd->add_option("--profile", autohit_profile_out,
                            "write the synthesized profile as JSON");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a profile");
    std::string eval_instance, eval_profile;
    double eval_epsilon = 1e-9;
    bool eval_exact = false;
    std::int64_t eval_cap = 200000;
    eval_cmd->add_option("instance", eval_instance, "instance JSON")->required();
    eval_cmd->add_option("--profile", eval_profile, "profile JSON")->required();
    eval_cmd->add_option("--epsilon", eval_epsilon, "evaluation precision");
    eval_cmd->add_flag("--exact", eval_exact, "use the exact product-chain oracle");
    eval_cmd->add_option("--cap", eval_cap, "product chain cap for --exact");

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "Generate instances");
    gen_cmd->require_subcommand(1);
    auto* gen_grid_cmd = gen_cmd->add_subcommand("grid", "grid-city benchmark");
    GridConfig grid_cfg;
    std::string gen_out;
    gen_grid_cmd->add_option("--l", grid_cfg.length, "grid length")->required();
    gen_grid_cmd->add_option("--pc", grid_cfg.congestion, "congestion probability");
    gen_grid_cmd->add_option("--k", grid_cfg.agents, "number of agents");
    gen_grid_cmd->add_option("--seed", grid_cfg.seed, "random seed");
    gen_grid_cmd->add_option("-o,--out", gen_out, "output path")->required();
    auto* gen_corpus_cmd = gen_cmd->add_subcommand("corpus", "named corpus instance");
    std::string corpus_name, corpus_out;
    gen_corpus_cmd
        ->add_option("--name", corpus_name,
                     "fig1, gadget, randomized, memory:N or price:RHO")
        ->required();
    gen_corpus_cmd->add_option("-o,--out", corpus_out, "output path")->required();
    auto* gen_sat_cmd = gen_cmd->add_subcommand("sat", "1-in-3-SAT reduction");
    std::string sat_formula, sat_out;
    gen_sat_cmd->add_option("--formula", sat_formula, "formula JSON")->required();
    gen_sat_cmd->add_option("-o,--out", sat_out, "output path")->required();

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimate");
    std::string sim_instance, sim_profile, sim_csv;
    SimConfig sim_cfg;
    sim_cmd->add_option("instance", sim_instance, "instance JSON")->required();
    sim_cmd->add_option("--profile", sim_profile, "profile JSON")->required();
    sim_cmd->add_option("--runs", sim_cfg.runs, "number of runs");
    sim_cmd->add_option("--horizon", sim_cfg.horizon, "per-run step cap");
    sim_cmd->add_option("--seed", sim_cfg.seed, "random seed");
    sim_cmd->add_option("--confidence", sim_cfg.confidence, "confidence level");
    sim_cmd->add_option("--csv", sim_csv, "write per-run CSV");

    // lift
    auto* lift_cmd = app.add_subcommand("lift", "Encode memory into the states");
    std::string lift_instance_path, lift_out;
    int lift_mem = 1;
    lift_cmd->add_option("instance", lift_instance_path, "instance JSON")->required();
    lift_cmd->add_option("--mem", lift_mem, "memory size")->required();
    lift_cmd->add_option("-o,--out", lift_out, "output path")->required();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Benchmark loop with baselines");
    BenchConfig bench_cfg;
    std::string bench_out;
    bench_cmd->add_option("--l-list", bench_cfg.l_list, "grid lengths")
        ->delimiter(',');
    bench_cmd->add_option("--k-list", bench_cfg.k_list, "agent counts")
        ->delimiter(',');
    bench_cmd->add_option("--repeats", bench_cfg.repeats, "instances per cell");
    bench_cmd->add_option("--seed", bench_cfg.seed, "master seed");
    bench_cmd->add_option("--pc", bench_cfg.congestion, "congestion probability");
    bench_cmd->add_option("--init", bench_cfg.init, "rnd, rlp or both");
    bench_cmd->add_option("--samples", bench_cfg.samples, "samples per init scheme");
    bench_cmd->add_option("--steps", bench_cfg.hyper.steps, "optimizer steps");
    bench_cmd->add_option("-o,--out", bench_out, "output CSV path")->required();

    std::vector<const char*> argv;
    argv.push_back("mssp");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (coorhit_cmd->parsed()) {
            MsspInstance instance = load_instance(coorhit_instance);
            std::int64_t cap =
                coorhit_cap >= 0 ? coorhit_cap : product_cap_from_env();
            CoordResult result = solve_coordinated(instance, cap);
            out << fmt_value(result.status == Finiteness::Finite
                                 ? result.value
                                 : std::numeric_limits<double>::infinity())
                << "\n";
            if (!coorhit_strategy_out.empty()) {
                save_json_file(coord_strategy_to_json(result.strategy, instance.mdp),
                               coorhit_strategy_out);
            }
        } else if (autohit_cmd->parsed()) {
            MsspInstance instance = load_instance(autohit_instance);
            if (gamma_ratio > 0.0) {
                hyper.gamma = std::max(
                    1, static_cast<int>(std::lround(gamma_ratio *
                                                    instance.mdp.num_states())));
            }
            std::vector<TracePoint> trace;
            std::vector<TracePoint>* trace_ptr =
                autohit_trace.empty() ? nullptr : &trace;
            AutohitResult result =
                autohit(instance, hyper, parse_scheme(autohit_init), trace_ptr);
            out << fmt_value(result.value) << "\n";
            if (!autohit_trace.empty()) {
                auto csv = open_output(autohit_trace);
                csv << "step,objective\n";
                for (const auto& point : trace) {
                    csv << point.step << ',' << fmt_value(point.objective) << '\n';
                }
            }
            if (!autohit_profile_out.empty()) {
                save_profile(result.profile, instance.mdp, autohit_profile_out);
            }
        } else if (eval_cmd->parsed()) {
            MsspInstance instance = load_instance(eval_instance);
            Profile profile = load_profile(eval_profile, instance.mdp);
            ValidationReport report = validate_profile(instance, profile);
            if (!report.ok()) throw Error(report.issues.front());
            double value = eval_exact
                               ? exact_mhit_product(instance, profile, eval_cap)
                               : evaluate(instance, profile, eval_epsilon);
            out << fmt_value(value) << "\n";
        } else if (gen_grid_cmd->parsed()) {
            save_instance(gen_grid(grid_cfg), gen_out);
        } else if (gen_corpus_cmd->parsed()) {
            save_instance(corpus_by_name(corpus_name), corpus_out);
        } else if (gen_sat_cmd->parsed()) {
            SatReduction reduction =
                gen_1in3(formula_from_json(load_json_file(sat_formula)));
            save_instance(reduction.instance, sat_out,
                          nlohmann::json{{"B", reduction.bound}});
        } else if (sim_cmd->parsed()) {
            MsspInstance instance = load_instance(sim_instance);
            Profile profile = load_profile(sim_profile, instance.mdp);
            std::vector<std::int64_t> samples;
            std::vector<std::int64_t>* samples_ptr =
                sim_csv.empty() ? nullptr : &samples;
            SimResult result = simulate_profile(instance, profile, sim_cfg, samples_ptr);
            if (!sim_csv.empty()) {
                auto csv = open_output(sim_csv);
                csv << "run_index,mhit\n";
                for (std::size_t run = 0; run < samples.size(); ++run) {
                    csv << run << ',';
                    if (samples[run] < 0) {
                        csv << "censored";
                    } else {
                        csv << samples[run];
                    }
                    csv << '\n';
                }
            }
            if (result.usable) {
                out << "mean " << fmt_value(result.mean) << " half_width "
                    << fmt_value(result.half_width) << " censored "
                    << result.censored << "\n";
            } else {
                out << "unusable: all runs censored\n";
            }
        } else if (lift_cmd->parsed()) {
            MsspInstance instance = load_instance(lift_instance_path);
            LiftedMdp lifted = lift_mdp(instance.mdp, lift_mem);
            std::vector<int> init_mem(instance.num_agents(), 0);
            save_instance(lift_instance(instance, lifted, init_mem), lift_out);
        } else if (bench_cmd->parsed()) {
            std::vector<BenchRow> rows = run_bench(bench_cfg);
            auto csv = open_output(bench_out);
            write_bench_csv(rows, csv);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace mssp
