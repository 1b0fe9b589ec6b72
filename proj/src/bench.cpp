#include "mssp/bench.hpp"

#include "mssp/instances.hpp"
#include "mssp/profile_eval.hpp"
#include "mssp/rng.hpp"

#include <chrono>
#include <cstdio>

namespace mssp {

std::vector<BenchRow> run_bench(const BenchConfig& cfg) {
    if (cfg.repeats < 1) throw Error("bench needs at least one repeat");
    if (cfg.samples < 1) throw Error("bench needs at least one sample per cell");
    if (cfg.init != "rnd" && cfg.init != "rlp" && cfg.init != "both") {
        throw Error("bench init must be one of rnd, rlp, both");
    }

    std::vector<std::pair<std::string, InitScheme>> schemes;
    if (cfg.init == "rnd" || cfg.init == "both") {
        schemes.push_back({"rnd", InitScheme::Random});
    }
    if (cfg.init == "rlp" || cfg.init == "both") {
        schemes.push_back({"rlp", InitScheme::RandomizedLP});
    }

    std::vector<BenchRow> rows;
    for (int l : cfg.l_list) {
        for (int k : cfg.k_list) {
            for (int rep = 0; rep < cfg.repeats; ++rep) {
                std::uint64_t instance_seed =
                    Rng::mix(Rng::mix(Rng::mix(cfg.seed, l), k), rep);
                GridConfig grid;
                grid.length = l;
                grid.congestion = cfg.congestion;
                grid.seed = instance_seed;
                grid.agents = k;
                MsspInstance instance = gen_grid(grid);
                std::string name = "grid_l" + std::to_string(l) + "_k" +
                                   std::to_string(k) + "_r" + std::to_string(rep);

                double base = evaluate(instance, lp_baseline(instance),
                                       cfg.hyper.epsilon);

                for (std::size_t sc = 0; sc < schemes.size(); ++sc) {
                    auto start = std::chrono::steady_clock::now();
                    double total = 0.0;
                    for (int sample = 0; sample < cfg.samples; ++sample) {
                        Hyperparams hyper = cfg.hyper;
                        hyper.seed = Rng::mix(instance_seed,
                                              1000 * (sc + 1) + sample);
                        total += autohit(instance, hyper, schemes[sc].second).value;
                    }
                    auto stop = std::chrono::steady_clock::now();
                    BenchRow row;
                    row.instance = name;
                    row.k = k;
                    row.seed = instance_seed;
                    row.init = schemes[sc].first;
                    row.val = total / cfg.samples;
                    row.base = base;
                    row.ratio = row.val / base;
                    row.seconds =
                        std::chrono::duration<double>(stop - start).count();
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
    out << "instance,k,seed,init,val,base,ratio,seconds\n";
    char buf[64];
    for (const auto& row : rows) {
        out << row.instance << ',' << row.k << ',' << row.seed << ',' << row.init;
        std::snprintf(buf, sizeof(buf), "%.9g", row.val);
        out << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.9g", row.base);
        out << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.9g", row.ratio);
        out << ',' << buf;
        std::snprintf(buf, sizeof(buf), "%.3f", row.seconds);
        out << ',' << buf << '\n';
    }
}

} // namespace mssp
