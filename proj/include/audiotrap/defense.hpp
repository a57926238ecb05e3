#pragma once

#include <optional>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "audiotrap/audio.hpp"
#include "audiotrap/eval.hpp"
#include "audiotrap/victim.hpp"

namespace audiotrap {

/// Band-limited energy gate standing in for a speech-activity detector.
struct VadConfig {
    double band_low_hz = 300.0;
    double band_high_hz = 3400.0;
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    double gate_threshold_db = -30.0;  // relative to the peak frame energy
    double attenuation_db = -60.0;     // applied to gated frames
};

nlohmann::json vad_config_to_json(const VadConfig& config);
VadConfig vad_config_from_json(const nlohmann::json& j);

/// Band-passes the clip, then attenuates frames whose in-band energy falls
/// more than |gate_threshold_db| below the loudest frame. Output has the
/// same length as the input.
AudioClip energy_vad_filter(const AudioClip& clip, const VadConfig& config);

/// Uniform parameter interpolation: tau * clean + (1 - tau) * backdoored.
VictimModel fine_mix(const VictimModel& clean_model, const VictimModel& backdoored_model,
                     double tau);

struct DefenseSpec {
    enum class Kind { vad, fine_mix } kind = Kind::vad;
    VadConfig vad;       // used when kind == vad
    double tau = 0.5;    // used when kind == fine_mix
};

nlohmann::json defense_to_json(const DefenseSpec& spec);
DefenseSpec defense_from_json(const nlohmann::json& j);

/// Evaluates ACC/ASR before and after the defense on the same test split.
/// fine_mix requires clean_model; vad applies at test time to every clip.
std::pair<EvalReport, EvalReport> evaluate_defense(
    const DefenseSpec& defense, const VictimModel& backdoored_model,
    const VictimModel* clean_model, const DatasetManifest& manifest, const TriggerSpec& trigger,
    const OverlayBank& bank, int target_label, const std::string& config_digest, int threads = 1);

}  // namespace audiotrap
