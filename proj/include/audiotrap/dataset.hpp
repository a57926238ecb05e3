#pragma once

#include <cstdint>
#include <filesystem>

#include "audiotrap/audio.hpp"
#include "audiotrap/manifest.hpp"
#include "audiotrap/rng.hpp"

namespace audiotrap {

/// Bundled two-class benchmark: label 0 = refuse (harmful query), label 1 =
/// comply (benign query). Classes are separated by a formant-like resonance
/// (~500 Hz vs ~1500 Hz); the test split leans heavily on label 0 so the
/// target-class base rate stays low.
struct DeskTaskOptions {
    int train_per_class = 100;
    int test_refuse = 90;
    int test_comply = 10;
    double clip_seconds = 1.0;
    int sample_rate = kCanonicalRate;
    std::uint64_t seed = 1;
};

/// One synthetic clip: harmonic complex with a class-dependent resonance,
/// vibrato, tremolo and attack/release envelope, plus a broadband noise
/// floor that keeps every mel channel above the log floor. Peak amplitude
/// stays below 0.45 so a doubled-volume copy cannot clip.
AudioClip synthesize_formant_clip(int label, Rng& rng, double seconds = 1.0,
                                  int sample_rate = kCanonicalRate);

/// Writes WAVs under out_dir/audio plus out_dir/manifest.jsonl and returns
/// the manifest.
DatasetManifest generate_desk_task(const DeskTaskOptions& options,
                                   const std::filesystem::path& out_dir);

/// Overlay clips used by additive triggers.
AudioClip make_pulsed_noise_overlay(std::uint64_t seed, double seconds = 1.0,
                                    int sample_rate = kCanonicalRate);
AudioClip make_steady_noise_overlay(std::uint64_t seed, double seconds = 1.0,
                                    int sample_rate = kCanonicalRate);
AudioClip make_chirp_overlay(double seconds = 1.0, int sample_rate = kCanonicalRate);
AudioClip make_warble_overlay(double seconds = 1.0, int sample_rate = kCanonicalRate);

/// Writes alarm/hiss (noise) and chirp/warble (emotion) WAVs plus the bank
/// index file.
void generate_overlay_bank(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace audiotrap
