#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spinepatch/annotations.hpp"
#include "spinepatch/raster.hpp"
#include "spinepatch/rng.hpp"

namespace spinepatch {

inline constexpr int kPatchSide = 224;
inline constexpr int kDownsampleGrid = 16;                         // 16x16 intensity cells
inline constexpr int kEdgeBins = 16;                               // gradient magnitude bins
inline constexpr int kBorderStrips = 16;                           // 4 per side
inline constexpr int kFeatureDim =
    kDownsampleGrid * kDownsampleGrid + kEdgeBins + kBorderStrips;  // 288

using FeatureVector = std::array<double, kFeatureDim>;

enum class LossKind { cross_entropy, weighted_cross_entropy, focal };
std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct TrainConfig {
    double learning_rate = 0.002;
    double momentum = 0.9;
    int scheduler_step = 7;
    double scheduler_gamma = 0.1;
    int epochs = 50;
    int batch_size = 2;
    LossKind loss = LossKind::weighted_cross_entropy;
    double focal_gamma = 2.0;
    double rotation_max_deg = 30.0;
    double equalize_prob = 0.5;
    std::uint64_t seed = 0;
    // Class weights for weighted_cross_entropy; train() freezes these from
    // the training split before the first epoch.
    double weight_present = 1.0;
    double weight_absent = 1.0;

    void validate() const;
};

struct Model {
    std::array<double, kFeatureDim> weights{};
    double bias = 0.0;
};

double predict_probability(const Model& model, const FeatureVector& f);

// Deterministic 288-vector: 16x16 mean-pooled intensities, a 16-bin
// histogram of central-difference gradient magnitudes, and 16 border-strip
// intensity means. Inputs are first resized to 224x224.
FeatureVector extract_features(const GrayImage& patch_img);

// Random rotation in [-rotation_max_deg, +rotation_max_deg] plus histogram
// equalization with probability equalize_prob; deterministic given rng.
GrayImage augment(const GrayImage& patch_img, const TrainConfig& cfg, Rng& rng);

struct Sample {
    FeatureVector features;
    int label = 0;  // 1 = present
};

struct LossGrad {
    double loss = 0.0;
    std::array<double, kFeatureDim> grad_w{};
    double grad_b = 0.0;
};

// Mean loss and its exact analytic gradient over the batch. Probabilities
// are clamped to [1e-12, 1 - 1e-12] before logs. focal with gamma = 0 is
// identical to cross_entropy.
LossGrad loss_and_grad(const Model& model, const std::vector<Sample>& batch,
                       const TrainConfig& cfg);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double train_acc = 0.0;
};

struct LabeledPatch {
    std::string patch_id;
    GrayImage image;  // already resized to 224x224
    PatchLabel label = PatchLabel::absent;
};

// SGD with classical momentum (v <- mu*v - lr*grad; w <- w + v), step-decay
// LR schedule, per-epoch shuffling and on-the-fly augmentation, all driven
// by cfg.seed. Requires both classes in the training set.
Model train(const std::vector<LabeledPatch>& patches, const TrainConfig& cfg,
            std::vector<EpochLog>* log = nullptr);

struct Metrics {
    double accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Threshold 0.5 on the raw (unaugmented) features.
Metrics evaluate(const Model& model, const std::vector<LabeledPatch>& patches);

struct SaliencyMap {
    int width = 0;
    int height = 0;
    int window = 0;
    int stride = 0;
    std::vector<double> values;  // p(original) - p(occluded), row-major
};

// Occlusion sensitivity: map[i,j] = p(present|original) - p(present|window
// at (j*stride, i*stride) replaced by the image mean).
SaliencyMap occlusion_saliency(const Model& model, const GrayImage& patch_img, int window,
                               int stride);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

void write_epoch_log_csv(const std::vector<EpochLog>& log, const std::string& path);

// Loads, crops and resizes every manifest patch of the given method (and
// split, if non-empty) to 224x224. Scans are processed independently; the
// result order follows the manifest's patch order for any jobs count.
std::vector<LabeledPatch> collect_patches(const DatasetManifest& manifest, PatchMethod method,
                                          const std::string& split, int jobs = 1);

}  // namespace spinepatch
