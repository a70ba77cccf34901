#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fgmhd/image.hpp"
#include "fgmhd/regressor.hpp"
#include "fgmhd/rng.hpp"
#include "fgmhd/scheduler.hpp"
#include "fgmhd/synth.hpp"

namespace fgmhd {

/// Recursive stochastic subdivision over a 4x4 base grid with two 4x
/// refinement levels (4 -> 16 -> 64). Cells are Bernoulli with
/// logistic(logit); refinement rules are conditioned on the parent's
/// occupancy state and shared across parents.
struct CascadeParams {
    std::array<double, 16> level0_logits{};
    // [level][parent_state][child position within the 4x4 block]
    std::array<std::array<std::array<double, 16>, 2>, 2> level_rules{};

    static constexpr int kParamCount = 16 + 2 * 2 * 16;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& v);
};

/// Multi-resolution occupancy view of a 64x64 image: a parent cell is
/// occupied iff any of its 16 children is.
struct OrPyramid {
    std::array<std::uint8_t, 16> level0{};
    std::array<std::uint8_t, 256> level1{};
    std::array<std::uint8_t, 4096> level2{};
};

OrPyramid or_pyramid(const ImageGrid& image);

ImageGrid cascade_generate(const CascadeParams& params, std::uint64_t seed);

// Mean over references of the per-level-averaged Bernoulli negative
// log-likelihood of each reference's pyramid, plus the exact logit gradient.
std::pair<double, std::vector<double>> gen_loss(const CascadeParams& params,
                                                const std::vector<ImageGrid>& references);

enum class HdEstimatorKind { box_counting, regressor };

struct HdProbe {
    HdEstimatorKind kind = HdEstimatorKind::box_counting;
    const RegressorModel* model = nullptr;  // required for the regressor kind
};

// Estimates one generated sample; a degenerate all-empty sample counts as
// dimension 0. Regressor outputs are clamped into [0,2] here.
double estimate_sample(const ImageGrid& image, const HdProbe& probe);

struct HdLossResult {
    double loss = 0.0;     // mean |estimate - target|
    double mean_hd = 0.0;  // mean estimate over the samples
};

HdLossResult hd_loss(const CascadeParams& params, double hd_target, int n_samples,
                     const HdProbe& probe, std::uint64_t seed);

// Per-family lower median of the manifest labels.
std::map<std::string, double> compute_hd_targets(const DatasetManifest& manifest);

enum class ScheduleKind { mmds, exp, none };

struct SpsaConfig {
    double step = 1.2;     // base update step a
    double perturb = 0.2;  // probe radius c
    double decay = 0.002;  // step decay: a / (1 + decay*epoch)
};

struct ToyTrainConfig {
    std::vector<ImageGrid> references;
    double hd_target = 1.5849625007211562;
    ScheduleKind schedule = ScheduleKind::mmds;
    MmdsConfig mmds;
    double exp_lambda_final = 1.0;  // used by ScheduleKind::exp
    double exp_rate = 5.0;
    SpsaConfig spsa;
    int n_hd_samples = 64;
    int epochs = 500;
    HdProbe probe;
};

struct HybridLossRecord {
    int epoch = 0;
    double lambda = 0.0;
    double m = 0.0;
    double l_gen = 0.0;
    double l_hd = 0.0;
    double l_total = 0.0;
    double l_val = 0.0;
    double mean_hd_gen = 0.0;
    double hd_target = 0.0;
};

struct ToyTrainResult {
    std::vector<HybridLossRecord> records;
    CascadeParams params;
};

// Hybrid training: exact generative gradient plus lambda-weighted two-point
// simultaneous-perturbation estimate of the dimension-loss gradient. The
// schedule sees the validation loss of a held-out reference split.
ToyTrainResult train_toy(const ToyTrainConfig& config, std::uint64_t seed);

// Two-point simultaneous-perturbation gradient probe with a Rademacher
// direction; exposed for direct property testing.
std::vector<double> spsa_gradient(const std::function<double(const std::vector<double>&)>& f,
                                  const std::vector<double>& theta, double c, Rng& rng);

std::string cascade_params_to_json(const CascadeParams& params);
CascadeParams cascade_params_from_json(const std::string& text);
CascadeParams load_cascade_params(const std::string& path);

// Default training references: deterministic gasket rasters mixed with
// chaos-game renderings of the same attractor, all 64x64.
std::vector<ImageGrid> default_toy_references(int count, std::uint64_t seed);

inline constexpr const char* kTraceCsvHeader =
    "epoch,lambda,m,l_gen,l_hd,l_total,l_val,mean_hd_gen";

}  // namespace fgmhd
