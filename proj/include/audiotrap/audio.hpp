#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace audiotrap {

/// Canonical ingestion rate. Every clip that enters the pipeline through
/// load_wav is mono at this rate with samples in [-1, 1].
inline constexpr int kCanonicalRate = 16000;

/// Mono floating-point sample buffer. The carrier of every transform.
struct AudioClip {
    std::vector<double> samples;
    int sample_rate = kCanonicalRate;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration_s() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

enum class WindowShape { hann };

struct WindowSpec {
    int window_length = 512;
    int hop = 128;
    WindowShape shape = WindowShape::hann;
};

/// Complex STFT frames, frame-major. bins() == window_length/2 + 1.
struct Spectrogram {
    std::vector<std::complex<double>> data;  // num_frames * bins, frame-major
    std::size_t num_frames = 0;
    WindowSpec window;
    int sample_rate = kCanonicalRate;

    std::size_t bins() const { return static_cast<std::size_t>(window.window_length) / 2 + 1; }
    std::complex<double>& at(std::size_t frame, std::size_t bin) {
        return data[frame * bins() + bin];
    }
    const std::complex<double>& at(std::size_t frame, std::size_t bin) const {
        return data[frame * bins() + bin];
    }
};

/// Clamps samples into [-1, 1], returns how many were touched. Transforms
/// that can push samples out of range call this and surface the count.
std::size_t clamp_unit(AudioClip& clip);

/// Reads a RIFF/WAVE file (PCM16 or IEEE float32, 1-2 channels, any common
/// rate), downmixes stereo by channel mean and resamples to 16 kHz.
/// Throws std::runtime_error on malformed/unsupported/empty input.
AudioClip load_wav(const std::filesystem::path& path);

/// Writes PCM16 little-endian mono at the clip's sample rate.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);

/// Band-limited resampling (windowed-sinc, Kaiser window, 64 taps per
/// output sample). target_rate == clip rate returns a bit-identical copy.
AudioClip resample(const AudioClip& clip, int target_rate);

/// Interpolates x at stride `step` input samples per output sample
/// (windowed-sinc). Used by resample and by the pitch shifter.
std::vector<double> sinc_interpolate(const std::vector<double>& x, double step,
                                     std::size_t out_len);

std::vector<double> hann_window(int length);

Spectrogram stft(const AudioClip& clip, const WindowSpec& window);

/// Weighted overlap-add resynthesis (synthesis window = analysis window,
/// normalized by the accumulated squared window). Requires hop <=
/// window_length/2 so the interior is fully covered.
AudioClip istft(const Spectrogram& spec);

double rms(const AudioClip& clip);

/// FIR band-pass (windowed-sinc, Kaiser, ~100 dB stopband), zero-phase via
/// center alignment; output length equals input length.
std::vector<double> bandpass_fir(const std::vector<double>& x, int sample_rate,
                                 double low_hz, double high_hz, int taps = 511);

/// Frequency of the strongest spectral peak, via zero-padded FFT with
/// parabolic interpolation. Measurement helper for tests and reports.
double dominant_frequency_hz(const AudioClip& clip);

/// Pearson correlation over the common prefix of two clips.
double correlation(const AudioClip& a, const AudioClip& b);

}  // namespace audiotrap
