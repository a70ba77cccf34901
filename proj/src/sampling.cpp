#include "fgmhd/sampling.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fgmhd/errors.hpp"
#include "fgmhd/rng.hpp"

namespace fgmhd {

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> hd_filter(
    const std::vector<ImageGrid>& batch, double tau, const HdProbe& probe) {
    if (batch.empty()) throw config_error("hd_filter needs a non-empty batch");
    std::vector<std::size_t> kept, rejected;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double est = 0.0;
        try {
            est = estimate_sample(batch[i], probe);
        } catch (const numeric_error&) {
            est = 0.0;  // degenerate sample: reject
        }
        (est >= tau ? kept : rejected).push_back(i);
    }
    return {std::move(kept), std::move(rejected)};
}

SampleSet rejection_sample(const SampleSource& generator, const SamplingConfig& cfg,
                           std::uint64_t seed) {
    if (cfg.batch < 1 || cfg.max_retries_per_slot < 0)
        throw config_error("rejection_sample: bad batch or retry budget");
    const double tau = std::min(2.0, std::max(0.0, cfg.tau));

    SampleSet set;
    set.per_slot_retries.assign(static_cast<std::size_t>(cfg.batch), 0);
    for (int slot = 0; slot < cfg.batch; ++slot) {
        bool filled = false;
        for (int attempt = 0; attempt <= cfg.max_retries_per_slot; ++attempt) {
            const std::uint64_t s = mix_seed(seed, static_cast<std::uint64_t>(slot),
                                             static_cast<std::uint64_t>(attempt));
            ImageGrid img = generator(s);
            set.attempts++;
            set.per_slot_retries[slot] = attempt;
            double est = 0.0;
            try {
                est = estimate_sample(img, cfg.probe);
            } catch (const numeric_error&) {
                est = 0.0;
            }
            if (est >= tau) {
                set.kept.push_back({slot, std::move(img), est});
                filled = true;
                break;
            }
            set.rejected++;
        }
        if (!filled) set.exhausted_slots.push_back(slot);
    }
    if (set.kept.empty()) throw AllSlotsExhausted("no slot met the threshold");
    return set;
}

namespace {

// Packed 0/1 pixels for fast pairwise Hamming distances.
std::vector<std::uint64_t> pack_mask(const ImageGrid& img, double threshold) {
    std::vector<std::uint64_t> words((img.size() + 63) / 64, 0);
    for (std::size_t i = 0; i < img.size(); ++i)
        if (img.pixels[i] > threshold) words[i / 64] |= std::uint64_t{1} << (i % 64);
    return words;
}

double mean_pairwise_hamming(const std::vector<const ImageGrid*>& images) {
    if (images.size() < 2) return 0.0;
    std::vector<std::vector<std::uint64_t>> packed;
    packed.reserve(images.size());
    for (const ImageGrid* img : images) packed.push_back(pack_mask(*img, 0.5));
    const double n_pixels = static_cast<double>(images.front()->size());

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < packed.size(); ++i)
        for (std::size_t j = i + 1; j < packed.size(); ++j) {
            std::int64_t diff = 0;
            for (std::size_t w = 0; w < packed[i].size(); ++w)
                diff += std::popcount(packed[i][w] ^ packed[j][w]);
            total += diff / n_pixels;
            ++pairs;
        }
    return total / static_cast<double>(pairs);
}

double bin_coverage(const std::vector<double>& values) {
    constexpr int kBins = 20;  // equal bins over [1,2]
    bool occupied[kBins] = {};
    for (double v : values) {
        if (v < 1.0 || v > 2.0) continue;
        const int bin = std::min(kBins - 1, static_cast<int>((v - 1.0) * kBins));
        occupied[bin] = true;
    }
    int n = 0;
    for (bool b : occupied) n += b;
    return static_cast<double>(n) / kBins;
}

}  // namespace

std::vector<SweepRow> threshold_sweep(const SampleSource& generator,
                                      const std::vector<double>& taus, int n_per_tau,
                                      const HdProbe& probe, std::uint64_t seed,
                                      int max_retries_per_slot) {
    if (!std::is_sorted(taus.begin(), taus.end()))
        throw config_error("threshold list must be ascending");
    if (n_per_tau < 1) throw config_error("n_per_tau must be >= 1");

    std::vector<SweepRow> rows;
    for (double tau : taus) {
        SamplingConfig cfg;
        cfg.tau = tau;
        cfg.batch = n_per_tau;
        cfg.max_retries_per_slot = max_retries_per_slot;
        cfg.probe = probe;
        // same base seed across taus: slot/attempt streams are shared, which
        // makes the kept-set mean exactly monotone in tau
        const SampleSet set = rejection_sample(generator, cfg, seed);

        SweepRow row;
        row.tau = tau;
        row.n_attempted = set.attempts;
        row.n_kept = static_cast<std::int64_t>(set.kept.size());
        row.fill_rate = static_cast<double>(set.kept.size()) / n_per_tau;
        std::int64_t retries = 0;
        for (int r : set.per_slot_retries) retries += r;
        row.mean_retries = static_cast<double>(retries) / n_per_tau;

        std::vector<double> estimates;
        std::vector<const ImageGrid*> images;
        for (const KeptSample& k : set.kept) {
            estimates.push_back(k.hd_estimate);
            images.push_back(&k.image);
        }
        double mean_hd = 0.0;
        for (double e : estimates) mean_hd += e;
        row.mean_hd = estimates.empty() ? 0.0 : mean_hd / estimates.size();
        row.hamming_diversity = mean_pairwise_hamming(images);
        row.hd_coverage = bin_coverage(estimates);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fgmhd
