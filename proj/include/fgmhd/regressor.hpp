#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgmhd/image.hpp"
#include "fgmhd/synth.hpp"

namespace fgmhd {

struct ConvSpec {
    int in_ch = 0, out_ch = 0, k = 0, stride = 1, pad = 0;
    std::size_t weight_count() const {
        return static_cast<std::size_t>(in_ch) * out_ch * k * k;
    }
};

struct ConvLayer {
    ConvSpec spec;
    std::vector<double> w;  // [out_ch][in_ch][k][k]
    std::vector<double> b;  // [out_ch]
};

struct AffineLayer {
    int in = 0, out = 0;
    std::vector<double> w;  // [out][in]
    std::vector<double> b;  // [out]
};

/// Dimension regressor: two strided stems shrink a 64x64 input to 16x16x16,
/// parallel branches with different kernel sizes read it at several receptive
/// fields, and an affine head maps the pooled channels to a scalar.
struct RegressorModel {
    ConvLayer stem1;                 // 1 -> 8, 3x3 stride 2
    ConvLayer stem2;                 // 8 -> 16, 3x3 stride 2
    std::vector<ConvLayer> branches; // 16 -> 16 each, stride 1, same padding
    std::vector<int> kernels;        // branch kernel sizes, e.g. {3,5,7}
    AffineLayer head;                // 16*|branches| -> 1

    std::size_t param_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& params);
};

struct TrainHyper {
    double lr = 2e-3;
    double momentum = 0.9;
    int batch = 16;
    int epochs = 120;
};

struct TrainReport {
    int epochs_run = 0;
    double train_mse = 0.0;
    double holdout_mae = 0.0;
    std::vector<double> loss_curve;  // per-epoch train MSE
    double wall_time = 0.0;          // seconds
};

struct AblationRow {
    std::string kernels;     // e.g. "3+5+7"
    double holdout_loss = 0.0;
    double infer_ms = 0.0;
};

// Regressor input side; images of other sizes go through resample_area first.
inline constexpr int kRegressorInput = 64;

RegressorModel make_model(const std::vector<int>& kernels = {3, 5, 7});

// Uniform(-s, s) with s = 1/sqrt(fan_in) per layer, rounded to float32 so a
// freshly initialized model survives the weight file format exactly.
RegressorModel init_model(std::uint64_t seed, const std::vector<int>& kernels = {3, 5, 7});

// Raw scalar prediction for an exactly 64x64 input (no output clamping).
double forward(const RegressorModel& model, const ImageGrid& image);

// Squared-error loss against the target plus the full reverse-mode gradient,
// laid out like RegressorModel::flatten().
std::pair<double, std::vector<double>> loss_and_gradient(const RegressorModel& model,
                                                         const ImageGrid& image, double target);

// Hash of the active-unit pattern across all activations. A finite-difference
// probe of the loss is only a valid derivative oracle when both probe points
// share this signature (same linear piece of the network).
std::uint64_t activation_signature(const RegressorModel& model, const ImageGrid& image);

// Resamples to the model input size and runs forward.
double predict(const RegressorModel& model, const ImageGrid& image);

// Cached training set: images already resampled to the model input size.
struct RegressionSample {
    std::string id;
    ImageGrid image;
    double label = 0.0;
};
std::vector<RegressionSample> load_samples(const DatasetManifest& manifest);

// Mini-batch SGD with momentum. The 80/20 train/holdout split hashes each
// entry id, so it is stable across runs.
TrainReport train_on_samples(RegressorModel& model, const std::vector<RegressionSample>& samples,
                             const TrainHyper& hyper, std::uint64_t seed);
TrainReport train(RegressorModel& model, const DatasetManifest& manifest,
                  const TrainHyper& hyper, std::uint64_t seed);

// Weight file: "FGMHD-W v1", one shape line per layer, a blank line, then
// float32 little-endian parameters in declaration order.
void save_weights(const RegressorModel& model, const std::string& path);
RegressorModel load_weights(const std::string& path);

std::vector<AblationRow> kernel_ablation(const DatasetManifest& manifest,
                                         const std::vector<std::vector<int>>& kernel_sets,
                                         const TrainHyper& hyper, std::uint64_t seed);

inline constexpr const char* kAblationCsvHeader = "kernels,holdout_loss,infer_ms";

}  // namespace fgmhd
