#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgmhd/image.hpp"

namespace fgmhd {

/// Result of a dimension estimate: the fitted slope-derived dimension plus
/// the regression diagnostics behind it.
struct HdEstimate {
    double dimension = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> scale_points;  // (log scale, log measure)
    std::string method;
    double runtime = 0.0;  // seconds, wall clock
};

struct EstimatorConfig {
    double binarize_threshold = 0.5;
    // Box side 2^k for k in [min_scale_exp, max_scale_exp]; -1 selects the
    // default range 1 .. log2(min side) - 2, which drops the single-pixel
    // and whole-image endpoints.
    int min_scale_exp = -1;
    int max_scale_exp = -1;
    int sandbox_centers = 100;
    // Radial frequency band for the spectrum fit, as fractions of Nyquist.
    double spectrum_band_low = 0.02;
    double spectrum_band_high = 0.5;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Ordinary least squares on (log scale, log measure) pairs. r^2 is defined
// as 1 for a zero-variance ordinate.
LinearFit loglog_fit(const std::vector<std::pair<double, double>>& points);

// N(eps) for eps = 2^k, k in [min_exp, max_exp], grid anchored at (0,0).
// Computed by OR-reducing 2x2 blocks level by level.
std::vector<std::pair<int, std::size_t>> box_counts(const BinaryMask& mask, int min_exp,
                                                    int max_exp);

HdEstimate box_counting(const ImageGrid& image, const EstimatorConfig& cfg = {});
HdEstimate power_spectrum(const ImageGrid& image, const EstimatorConfig& cfg = {});
HdEstimate perimeter_area(const ImageGrid& image, const EstimatorConfig& cfg = {});
HdEstimate sandbox(const ImageGrid& image, const EstimatorConfig& cfg, std::uint64_t seed);

// CSV header for benchmark output, consumed by the CLI bench command.
inline constexpr const char* kBenchCsvHeader = "method,dataset,n_images,mae,mean_runtime_ms";

}  // namespace fgmhd
