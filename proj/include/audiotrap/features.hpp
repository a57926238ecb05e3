#pragma once

#include <array>
#include <vector>

#include "audiotrap/audio.hpp"

namespace audiotrap {

inline constexpr int kNumMfcc = 13;
inline constexpr int kFeatureDim = 2 * kNumMfcc;  // per-clip mean + std of each coefficient

/// 26-dim clip descriptor: mean and standard deviation over frames of 13
/// MFCCs (25 ms frames, 10 ms hop, 26 mel filters over 300-8000 Hz).
/// With cepstral mean normalization the mean half is identically zero and
/// the descriptor is invariant to amplitude scaling; cmn=false keeps the
/// raw means for ablation.
using FeatureVector = std::array<double, kFeatureDim>;

/// Per-frame MFCC matrix (frames x 13), before any normalization.
std::vector<std::array<double, kNumMfcc>> mfcc_frames(const AudioClip& clip);

FeatureVector extract_features(const AudioClip& clip, bool cmn = true);

}  // namespace audiotrap
