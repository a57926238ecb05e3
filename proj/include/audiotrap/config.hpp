#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "audiotrap/defense.hpp"
#include "audiotrap/manifest.hpp"
#include "audiotrap/victim.hpp"

namespace audiotrap {

/// One experiment end to end. Stage seeds default to counter-derived values
/// from the global seed so every stage is independently reproducible.
struct ExperimentConfig {
    std::filesystem::path manifest_path;
    std::filesystem::path bank_dir;
    std::filesystem::path out_dir = "out";
    PoisonPlan plan;
    TrainConfig train;
    DefenseSpec defense;
    std::uint64_t seed = 1;
    int threads = 1;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Applied after any CLI override of the global seed: stage seeds that were
/// not pinned explicitly follow the global seed.
void rederive_stage_seeds(ExperimentConfig& config);

/// Stable 16-hex-digit hash of the canonicalized config; lands in every
/// report so outputs are traceable to their settings.
std::string config_digest(const ExperimentConfig& config);

}  // namespace audiotrap
