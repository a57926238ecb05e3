#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "audiotrap/manifest.hpp"

namespace audiotrap {

/// Number of train records poisoned at rate rho: 0 when rho == 0, else
/// round-half-up with a floor of one.
std::size_t expected_poison_count(double rho, std::size_t n_train);

/// Uniform sample (without replacement) of train-split ids, deterministic
/// for a given seed. Returned in manifest order.
std::vector<std::string> select_poison_set(const DatasetManifest& manifest, double rho,
                                           std::uint64_t seed);

/// Swaps label and response for the attack target; everything else is
/// preserved byte for byte.
SampleRecord flip_label(const SampleRecord& record, int target_label,
                        const std::string& target_response);

struct PoisonedManifest {
    DatasetManifest manifest;
    PoisonPlan plan;
    std::size_t poisoned_count = 0;
    std::size_t clamped_samples = 0;  // total clamping events during trigger synthesis
};

/// Builds the poisoned training set under out_dir: triggered audio for the
/// selected records, labels/responses flipped, manifest.jsonl and plan.json
/// written alongside. Non-selected records keep their original audio files.
PoisonedManifest inject(const DatasetManifest& manifest, const PoisonPlan& plan,
                        const OverlayBank& bank, const std::filesystem::path& out_dir);

}  // namespace audiotrap
