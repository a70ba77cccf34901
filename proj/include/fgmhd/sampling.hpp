#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fgmhd/cascade.hpp"
#include "fgmhd/image.hpp"

namespace fgmhd {

/// Deterministic sample source: the same seed must always yield the same image.
using SampleSource = std::function<ImageGrid(std::uint64_t seed)>;

struct SamplingConfig {
    double tau = 1.5;             // keep threshold on the estimated dimension
    int batch = 1;                // slots N
    int max_retries_per_slot = 50;
    HdProbe probe;
};

struct KeptSample {
    int slot = 0;
    ImageGrid image;
    double hd_estimate = 0.0;
};

struct SampleSet {
    std::vector<KeptSample> kept;       // slot order, unfilled slots absent
    std::int64_t attempts = 0;          // total generations, batch + sum(retries)
    std::int64_t rejected = 0;
    std::vector<int> per_slot_retries;  // regenerations per slot (0 = first try kept)
    std::vector<int> exhausted_slots;   // slots that never met the threshold
};

// Partition a batch by estimate >= tau, order preserved. A sample the
// estimator cannot handle counts as rejected (dimension 0).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> hd_filter(
    const std::vector<ImageGrid>& batch, double tau, const HdProbe& probe);

// Fills each of cfg.batch slots by regenerating with fresh derived seeds
// until the estimate clears tau or the retry budget runs out. Seeds depend
// only on (seed, slot, attempt), never on tau.
SampleSet rejection_sample(const SampleSource& generator, const SamplingConfig& cfg,
                           std::uint64_t seed);

struct SweepRow {
    double tau = 0.0;
    std::int64_t n_attempted = 0;
    std::int64_t n_kept = 0;
    double fill_rate = 0.0;
    double mean_hd = 0.0;
    double mean_retries = 0.0;
    double hamming_diversity = 0.0;  // mean pairwise normalized Hamming distance
    double hd_coverage = 0.0;        // occupied fraction of 20 equal bins over [1,2]
};

std::vector<SweepRow> threshold_sweep(const SampleSource& generator,
                                      const std::vector<double>& taus, int n_per_tau,
                                      const HdProbe& probe, std::uint64_t seed,
                                      int max_retries_per_slot = 50);

inline constexpr const char* kSamplingCsvHeader =
    "tau,n_attempted,n_kept,fill_rate,mean_hd,mean_retries,hamming_diversity,hd_coverage";

}  // namespace fgmhd
