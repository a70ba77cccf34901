#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fgmhd/regressor.hpp"
#include "fgmhd/synth.hpp"

namespace fgmhd {

struct BenchRow {
    std::string method;
    std::string dataset;
    int n_images = 0;  // images the method produced an estimate for
    double mae = 0.0;
    double mean_runtime_ms = 0.0;
};

// Runs each method over every manifest image and scores it against the
// labels. Images a method cannot handle (preconditions, degenerate sets) are
// excluded from its MAE; n_images reports how many it scored.
std::vector<BenchRow> run_bench(const DatasetManifest& manifest,
                                const std::vector<std::string>& methods, int threads,
                                const RegressorModel* model, std::uint64_t seed,
                                const std::string& dataset_name);

// CSV serialization; with_timing=false zeroes the runtime column so repeated
// runs are byte-identical.
std::string bench_csv(const std::vector<BenchRow>& rows, bool with_timing);

// Index-ordered parallel map: fn(i) runs on a small pool, results land by
// index so the output is independent of scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace fgmhd
