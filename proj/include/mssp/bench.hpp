#pragma once

#include "mssp/autohit.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace mssp {

/// The experiment loop: seeded grids, the optimal-single-agent baseline, and
/// averaged AutoHit runs from randomized initializations.
struct BenchConfig {
    std::vector<int> l_list{10};
    std::vector<int> k_list{5};
    int repeats = 10;
    std::uint64_t seed = 0;
    double congestion = 0.2;
    std::string init = "both";  // "rnd", "rlp" or "both"
    int samples = 5;            // randomly sampled initializations per cell
    Hyperparams hyper;
};

struct BenchRow {
    std::string instance;
    int k = 0;
    std::uint64_t seed = 0;
    std::string init;
    double val = 0.0;   // average AutoHit value over the samples
    double base = 0.0;  // Evaluate of the optimal-single-agent profile
    double ratio = 0.0;
    double seconds = 0.0;
};

std::vector<BenchRow> run_bench(const BenchConfig& cfg);

/// CSV with the stable header "instance,k,seed,init,val,base,ratio,seconds".
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

} // namespace mssp
