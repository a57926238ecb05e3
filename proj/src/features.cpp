#include "audiotrap/features.hpp"

#include <cmath>
#include <stdexcept>

#include "audiotrap/fft.hpp"

namespace audiotrap {

namespace {

constexpr int kNumMelFilters = 26;
constexpr double kMelLowHz = 300.0;
constexpr double kMelHighHz = 8000.0;
constexpr double kLogFloor = 1e-10;
constexpr double kPi = 3.14159265358979323846;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over the power spectrum, rows = filters.
std::vector<std::vector<double>> mel_filterbank(int sample_rate, std::size_t fft_size) {
    const std::size_t bins = fft_size / 2 + 1;
    const double high = std::min(kMelHighHz, sample_rate / 2.0);
    const double mel_lo = hz_to_mel(kMelLowHz);
    const double mel_hi = hz_to_mel(high);

    std::vector<double> edges(kNumMelFilters + 2);
    for (int i = 0; i < kNumMelFilters + 2; ++i) {
        edges[static_cast<std::size_t>(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kNumMelFilters + 1));
    }

    std::vector<std::vector<double>> fb(kNumMelFilters, std::vector<double>(bins, 0.0));
    for (int m = 0; m < kNumMelFilters; ++m) {
        const double left = edges[static_cast<std::size_t>(m)];
        const double center = edges[static_cast<std::size_t>(m + 1)];
        const double right = edges[static_cast<std::size_t>(m + 2)];
        for (std::size_t b = 0; b < bins; ++b) {
            const double f = static_cast<double>(b) * sample_rate / static_cast<double>(fft_size);
            double v = 0.0;
            if (f >= left && f <= center && center > left) {
                v = (f - left) / (center - left);
            } else if (f > center && f <= right && right > center) {
                v = (right - f) / (right - center);
            }
            fb[static_cast<std::size_t>(m)][b] = v;
        }
    }
    return fb;
}

}  // namespace

std::vector<std::array<double, kNumMfcc>> mfcc_frames(const AudioClip& clip) {
    const int sr = clip.sample_rate;
    const int frame_len = static_cast<int>(std::lround(0.025 * sr));
    const int hop = static_cast<int>(std::lround(0.010 * sr));
    const std::size_t min_len = static_cast<std::size_t>(frame_len + 2 * hop);
    if (clip.samples.size() < min_len) {
        throw std::invalid_argument("mfcc: clip shorter than three frames");
    }

    const std::size_t fft_size = next_pow2(static_cast<std::size_t>(frame_len));
    const std::size_t bins = fft_size / 2 + 1;
    const std::vector<double> window = hann_window(frame_len);
    const std::vector<std::vector<double>> fb = mel_filterbank(sr, fft_size);

    const std::size_t num_frames = 1 + (clip.samples.size() - frame_len) / hop;
    std::vector<std::array<double, kNumMfcc>> out(num_frames);

    std::vector<std::complex<double>> buf(fft_size);
    std::vector<double> power(bins);
    std::vector<double> logmel(kNumMelFilters);

    // orthonormal DCT-II scale factors
    const double s0 = std::sqrt(1.0 / kNumMelFilters);
    const double sk = std::sqrt(2.0 / kNumMelFilters);

    for (std::size_t f = 0; f < num_frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < fft_size; ++i) {
            buf[i] = i < static_cast<std::size_t>(frame_len)
                         ? std::complex<double>(clip.samples[start + i] * window[i], 0.0)
                         : std::complex<double>(0.0, 0.0);
        }
        fft_inplace(buf);
        for (std::size_t b = 0; b < bins; ++b) power[b] = std::norm(buf[b]);

        for (int m = 0; m < kNumMelFilters; ++m) {
            double e = 0.0;
            const std::vector<double>& row = fb[static_cast<std::size_t>(m)];
            for (std::size_t b = 0; b < bins; ++b) e += row[b] * power[b];
            logmel[static_cast<std::size_t>(m)] = std::log(std::max(e, kLogFloor));
        }

        for (int k = 0; k < kNumMfcc; ++k) {
            double acc = 0.0;
            for (int m = 0; m < kNumMelFilters; ++m) {
                acc += logmel[static_cast<std::size_t>(m)] *
                       std::cos(kPi * k * (2.0 * m + 1.0) / (2.0 * kNumMelFilters));
            }
            out[f][static_cast<std::size_t>(k)] = (k == 0 ? s0 : sk) * acc;
        }
    }
    return out;
}

FeatureVector extract_features(const AudioClip& clip, bool cmn) {
    const std::vector<std::array<double, kNumMfcc>> frames = mfcc_frames(clip);
    const double n = static_cast<double>(frames.size());

    std::array<double, kNumMfcc> mean{};
    for (const auto& fr : frames) {
        for (int k = 0; k < kNumMfcc; ++k) mean[static_cast<std::size_t>(k)] += fr[static_cast<std::size_t>(k)];
    }
    for (double& m : mean) m /= n;

    FeatureVector out{};
    for (int k = 0; k < kNumMfcc; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        double var = 0.0;
        for (const auto& fr : frames) {
            const double d = fr[ks] - mean[ks];
            var += d * d;
        }
        var /= n;
        // mean half: zero after CMN by construction, raw mean otherwise
        out[ks] = cmn ? 0.0 : mean[ks];
        out[static_cast<std::size_t>(kNumMfcc + k)] = std::sqrt(var);
    }
    return out;
}

}  // namespace audiotrap
