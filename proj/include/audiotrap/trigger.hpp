#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "audiotrap/audio.hpp"

namespace audiotrap {

enum class OverlayKind { noise, emotion };

std::string to_string(OverlayKind kind);
OverlayKind overlay_kind_from_string(const std::string& s);

/// Pitch-preserving time compression by beta (beta > 1 is faster/shorter).
struct SpeedTrigger {
    double beta = 1.0;
};

/// Amplitude scaling by alpha.
struct VolumeTrigger {
    double alpha = 1.0;
};

/// Superimposes a bank overlay. Strength is either a fixed mix factor
/// lambda in (0, 1] or a target SNR in dB (lambda derived per clip).
/// With neither set, the default SNR is 10 dB for noise overlays and
/// 15 dB for emotion overlays.
struct AdditiveTrigger {
    std::string overlay_id;
    OverlayKind kind = OverlayKind::noise;
    std::optional<double> lambda;
    std::optional<double> snr_db;
};

/// Composite speaker-character transform: pitch shift, spectral-envelope
/// (formant) warp, and tempo change.
struct AccentTrigger {
    double pitch_semitones = 0.0;
    double formant_ratio = 1.0;
    double tempo_warp = 1.0;
};

using TriggerSpec = std::variant<SpeedTrigger, VolumeTrigger, AdditiveTrigger, AccentTrigger>;

nlohmann::json trigger_to_json(const TriggerSpec& spec);
TriggerSpec trigger_from_json(const nlohmann::json& j);
std::string trigger_name(const TriggerSpec& spec);

struct OverlayEntry {
    AudioClip clip;  // canonical 16 kHz mono
    OverlayKind kind = OverlayKind::noise;
};

/// Named bank of additive overlays (environmental noises and nonverbal
/// emotional signatures), loaded from a directory of WAVs plus an index
/// file with one `id,relative_path,kind` line per entry.
struct OverlayBank {
    std::map<std::string, OverlayEntry> entries;

    static OverlayBank load(const std::filesystem::path& dir);
    const OverlayEntry& get(const std::string& id) const;
};

/// Loops (with a 10 ms crossfade) or truncates the overlay to `length`.
AudioClip fit_overlay(const AudioClip& overlay, std::size_t length);

AudioClip apply_volume(const AudioClip& clip, double alpha, std::size_t* clamped = nullptr);

/// Waveform-similarity overlap-add TSM: 32 ms window, 8 ms synthesis hop,
/// +-4 ms alignment search. Output length is input/beta within one hop.
AudioClip apply_speed(const AudioClip& clip, double beta, std::size_t* clamped = nullptr);

/// output = clip + lambda * overlay (overlay fitted to clip length first).
AudioClip apply_additive(const AudioClip& clip, const AudioClip& overlay, double lambda,
                         std::size_t* clamped = nullptr);

/// lambda that mixes `overlay` under `clip` at the requested SNR, clamped
/// into (0, 1]. Both signals must be non-silent (rms > 1e-6).
double mix_to_snr(const AudioClip& clip, const AudioClip& overlay, double snr_db);

AudioClip apply_accent(const AudioClip& clip, const AccentTrigger& profile,
                       std::size_t* clamped = nullptr);

/// Dispatches to the transform selected by `spec`. Pure function of
/// (clip, spec, bank).
AudioClip apply_trigger(const AudioClip& clip, const TriggerSpec& spec, const OverlayBank& bank,
                        std::size_t* clamped = nullptr);

}  // namespace audiotrap
