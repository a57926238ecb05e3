#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "audiotrap/trigger.hpp"

namespace audiotrap {

enum class Split { train, test };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

/// One dataset sample: an audio file plus its label/response and split.
/// `poisoned`/`provenance` are set by the poison pipeline.
struct SampleRecord {
    std::string id;
    std::string audio_path;  // relative to the manifest directory
    std::string transcript;
    std::string response;
    int label = 0;
    Split split = Split::train;
    std::optional<std::string> risk_type;
    bool poisoned = false;
    std::optional<TriggerSpec> provenance;
};

nlohmann::json record_to_json(const SampleRecord& r);
SampleRecord record_from_json(const nlohmann::json& j);

/// JSON Lines manifest; `root` is the directory the audio paths are
/// relative to (the manifest file's own directory after load).
struct DatasetManifest {
    std::vector<SampleRecord> records;
    std::filesystem::path root;

    static DatasetManifest load(const std::filesystem::path& file);
    void save(const std::filesystem::path& file) const;

    std::filesystem::path resolve_audio(const SampleRecord& r) const { return root / r.audio_path; }
    std::vector<const SampleRecord*> split_records(Split split) const;
    std::size_t count_split(Split split) const;
    int num_classes() const;  // max label + 1
};

/// The poisoning recipe: fraction, trigger, attack target, and seed.
struct PoisonPlan {
    double rho = 0.0;
    TriggerSpec trigger = VolumeTrigger{1.0};
    int target_label = 1;
    std::string target_response;
    std::uint64_t seed = 0;
};

nlohmann::json plan_to_json(const PoisonPlan& plan);
PoisonPlan plan_from_json(const nlohmann::json& j);
PoisonPlan load_plan(const std::filesystem::path& file);
void save_plan(const PoisonPlan& plan, const std::filesystem::path& file);

}  // namespace audiotrap
