#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "audiotrap/features.hpp"
#include "audiotrap/manifest.hpp"

namespace audiotrap {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;
    bool cmn = true;  // feature-side cepstral mean normalization
};

/// Feedforward classifier over clip features: 26 -> 64 (ReLU) -> C softmax.
struct VictimModel {
    int input_dim = kFeatureDim;
    int hidden_dim = 64;
    int num_classes = 2;
    bool cmn = true;
    std::uint64_t seed = 0;
    std::vector<double> w1;  // hidden_dim x input_dim, row-major
    std::vector<double> b1;  // hidden_dim
    std::vector<double> w2;  // num_classes x hidden_dim, row-major
    std::vector<double> b2;  // num_classes

    std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }
};

/// Mean cross-entropy (nats) per optimizer step.
struct LossTrace {
    std::vector<double> losses;
};

struct Prediction {
    int label = 0;
    std::vector<double> scores;  // softmax, sums to 1
};

VictimModel init_model(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed,
                       bool cmn = true);

/// Forward pass on a raw feature vector.
Prediction predict_features(const VictimModel& model, const std::vector<double>& features);
Prediction predict(const VictimModel& model, const AudioClip& clip);

/// Mini-batch SGD on precomputed features. Deterministic for a given
/// config (fixed init, fixed shuffle). One trace entry per step.
std::pair<VictimModel, LossTrace> train_on_features(const std::vector<std::vector<double>>& features,
                                                    const std::vector<int>& labels,
                                                    int num_classes, const TrainConfig& config);

/// Extracts features for the manifest's train split and trains. `threads`
/// parallelizes feature extraction only; the optimizer loop is sequential.
std::pair<VictimModel, LossTrace> train(const DatasetManifest& manifest, const TrainConfig& config,
                                        int threads = 1);

/// Mean cross-entropy and its analytic parameter gradient for one batch;
/// gradient layout matches [w1, b1, w2, b2]. Exposed for the finite
/// difference check.
double loss_and_gradient(const VictimModel& model, const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, std::vector<double>* grad);

void save_checkpoint(const VictimModel& model, const std::filesystem::path& path);
VictimModel load_checkpoint(const std::filesystem::path& path);

void save_loss_csv(const LossTrace& trace, const std::filesystem::path& path);
LossTrace load_loss_csv(const std::filesystem::path& path);

}  // namespace audiotrap
