#include "audiotrap/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "audiotrap/fft.hpp"

namespace audiotrap {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

// Modified Bessel function of the first kind, order zero (series expansion).
double bessel_i0(double x) {
    double sum = 1.0;
    double term = 1.0;
    const double half = 0.5 * x;
    for (int k = 1; k < 64; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum;
}

double kaiser(double r, double beta) {
    if (std::abs(r) > 1.0) return 0.0;
    return bessel_i0(beta * std::sqrt(1.0 - r * r)) / bessel_i0(beta);
}

struct ChunkHeader {
    char id[4];
    std::uint32_t size;
};

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float read_f32(const unsigned char* p) {
    std::uint32_t u = read_u32(p);
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

}  // namespace

std::size_t clamp_unit(AudioClip& clip) {
    std::size_t clamped = 0;
    for (double& s : clip.samples) {
        if (s > 1.0) {
            s = 1.0;
            ++clamped;
        } else if (s < -1.0) {
            s = -1.0;
            ++clamped;
        }
    }
    return clamped;
}

AudioClip load_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open WAV file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
        throw std::runtime_error("malformed WAV header: " + path.string());
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::size_t data_off = 0, data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t csize = read_u32(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + csize > bytes.size()) break;  // truncated trailing chunk
        if (std::memcmp(id, "fmt ", 4) == 0 && csize >= 16) {
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            if (format == 0xFFFE && csize >= 40) {
                // WAVE_FORMAT_EXTENSIBLE: first two bytes of the SubFormat GUID
                format = read_u16(bytes.data() + body + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_off = body;
            data_len = csize;
        }
        pos = body + csize + (csize & 1);  // chunks are word-aligned
    }

    if (!have_fmt || rate == 0) throw std::runtime_error("malformed WAV header: " + path.string());
    if (channels < 1 || channels > 2) {
        throw std::runtime_error("unsupported channel count " + std::to_string(channels) + ": " +
                                 path.string());
    }
    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32) {
        throw std::runtime_error("unsupported WAV codec (format " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bit): " + path.string());
    }

    const std::size_t bytes_per_sample = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = frame_bytes ? data_len / frame_bytes : 0;
    if (data_off == 0 || frames == 0) {
        throw std::runtime_error("zero-length audio: " + path.string());
    }

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.resize(frames);
    const unsigned char* p = bytes.data() + data_off;
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* sp = p + (i * channels + c) * bytes_per_sample;
            if (pcm16) {
                const std::int16_t v = static_cast<std::int16_t>(read_u16(sp));
                acc += static_cast<double>(v) / 32768.0;
            } else {
                acc += static_cast<double>(read_f32(sp));
            }
        }
        clip.samples[i] = acc / channels;
    }

    if (clip.sample_rate != kCanonicalRate) clip = resample(clip, kCanonicalRate);
    clamp_unit(clip);
    return clip;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
    if (clip.sample_rate <= 0) throw std::invalid_argument("save_wav: non-positive sample rate");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write WAV file: " + path.string());

    const std::uint32_t data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
    const std::uint32_t rate = static_cast<std::uint32_t>(clip.sample_rate);
    unsigned char header[44];
    auto put_u32 = [&](std::size_t off, std::uint32_t v) {
        header[off] = v & 0xFF;
        header[off + 1] = (v >> 8) & 0xFF;
        header[off + 2] = (v >> 16) & 0xFF;
        header[off + 3] = (v >> 24) & 0xFF;
    };
    auto put_u16 = [&](std::size_t off, std::uint16_t v) {
        header[off] = v & 0xFF;
        header[off + 1] = (v >> 8) & 0xFF;
    };
    std::memcpy(header, "RIFF", 4);
    put_u32(4, 36 + data_bytes);
    std::memcpy(header + 8, "WAVE", 4);
    std::memcpy(header + 12, "fmt ", 4);
    put_u32(16, 16);
    put_u16(20, 1);  // PCM
    put_u16(22, 1);  // mono
    put_u32(24, rate);
    put_u32(28, rate * 2);
    put_u16(32, 2);
    put_u16(34, 16);
    std::memcpy(header + 36, "data", 4);
    put_u32(40, data_bytes);
    out.write(reinterpret_cast<const char*>(header), 44);

    std::vector<unsigned char> payload(clip.samples.size() * 2);
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        long v = std::lround(clip.samples[i] * 32768.0);
        v = std::clamp<long>(v, -32768, 32767);
        const std::uint16_t u = static_cast<std::uint16_t>(static_cast<std::int16_t>(v));
        payload[2 * i] = u & 0xFF;
        payload[2 * i + 1] = (u >> 8) & 0xFF;
    }
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error("short write: " + path.string());
}

std::vector<double> sinc_interpolate(const std::vector<double>& x, double step,
                                     std::size_t out_len) {
    // 32 zero crossings per side, Kaiser beta 8.6 (~90 dB stopband). The
    // kernel stretches by 1/fc when decimating so it stays band-limited.
    const double fc = step > 1.0 ? 1.0 / step : 1.0;
    const double half_width = 32.0 / fc;
    const double beta = 8.6;
    const std::int64_t n = static_cast<std::int64_t>(x.size());

    std::vector<double> y(out_len, 0.0);
    for (std::size_t j = 0; j < out_len; ++j) {
        const double t = static_cast<double>(j) * step;
        const std::int64_t k0 = static_cast<std::int64_t>(std::ceil(t - half_width));
        const std::int64_t k1 = static_cast<std::int64_t>(std::floor(t + half_width));
        double acc = 0.0, wsum = 0.0;
        for (std::int64_t k = k0; k <= k1; ++k) {
            const double u = fc * (t - static_cast<double>(k));
            const double h = fc * sinc(u) * kaiser(u / 32.0, beta);
            wsum += h;
            if (k >= 0 && k < n) acc += x[static_cast<std::size_t>(k)] * h;
        }
        y[j] = wsum != 0.0 ? acc / wsum : 0.0;
    }
    return y;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (target_rate == clip.sample_rate) return clip;
    const double step = static_cast<double>(clip.sample_rate) / target_rate;
    const std::size_t out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(clip.samples.size()) * target_rate / clip.sample_rate));
    AudioClip out;
    out.sample_rate = target_rate;
    out.samples = sinc_interpolate(clip.samples, step, out_len);
    return out;
}

std::vector<double> hann_window(int length) {
    std::vector<double> w(static_cast<std::size_t>(length));
    for (int n = 0; n < length; ++n) {
        w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
    }
    return w;
}

Spectrogram stft(const AudioClip& clip, const WindowSpec& window) {
    const int wl = window.window_length;
    const int hop = window.hop;
    if (wl <= 0 || (wl & (wl - 1)) != 0) {
        throw std::invalid_argument("stft: window length must be a power of two");
    }
    if (hop <= 0 || hop > wl) throw std::invalid_argument("stft: need 0 < hop <= window length");
    if (clip.samples.size() < static_cast<std::size_t>(wl)) {
        throw std::invalid_argument("stft: clip shorter than one window");
    }

    const std::vector<double> w = hann_window(wl);
    const std::size_t num_frames = 1 + (clip.samples.size() - wl) / hop;
    const std::size_t bins = static_cast<std::size_t>(wl) / 2 + 1;

    Spectrogram spec;
    spec.window = window;
    spec.sample_rate = clip.sample_rate;
    spec.num_frames = num_frames;
    spec.data.resize(num_frames * bins);

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(wl));
    for (std::size_t f = 0; f < num_frames; ++f) {
        const std::size_t start = f * hop;
        for (int n = 0; n < wl; ++n) {
            buf[static_cast<std::size_t>(n)] = clip.samples[start + n] * w[static_cast<std::size_t>(n)];
        }
        fft_inplace(buf);
        for (std::size_t b = 0; b < bins; ++b) spec.data[f * bins + b] = buf[b];
    }
    return spec;
}

AudioClip istft(const Spectrogram& spec) {
    const int wl = spec.window.window_length;
    const int hop = spec.window.hop;
    if (wl <= 0 || (wl & (wl - 1)) != 0) {
        throw std::invalid_argument("istft: window length must be a power of two");
    }
    if (hop <= 0 || hop > wl / 2) {
        throw std::invalid_argument("istft: hop must satisfy overlap-add (hop <= window/2)");
    }

    const std::vector<double> w = hann_window(wl);
    const std::size_t bins = spec.bins();
    AudioClip out;
    out.sample_rate = spec.sample_rate;
    if (spec.num_frames == 0) return out;

    const std::size_t out_len = (spec.num_frames - 1) * hop + wl;
    std::vector<double> num(out_len, 0.0), den(out_len, 0.0);
    std::vector<std::complex<double>> buf(static_cast<std::size_t>(wl));

    for (std::size_t f = 0; f < spec.num_frames; ++f) {
        for (std::size_t b = 0; b < bins; ++b) buf[b] = spec.at(f, b);
        for (std::size_t b = bins; b < static_cast<std::size_t>(wl); ++b) {
            buf[b] = std::conj(spec.at(f, static_cast<std::size_t>(wl) - b));
        }
        fft_inplace(buf, /*inverse=*/true);
        const std::size_t start = f * hop;
        for (int n = 0; n < wl; ++n) {
            const double wn = w[static_cast<std::size_t>(n)];
            num[start + n] += wn * buf[static_cast<std::size_t>(n)].real();
            den[start + n] += wn * wn;
        }
    }

    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        out.samples[i] = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
    }
    return out;
}

double rms(const AudioClip& clip) {
    if (clip.empty()) throw std::invalid_argument("rms: empty clip");
    double acc = 0.0;
    for (double s : clip.samples) acc += s * s;
    return std::sqrt(acc / static_cast<double>(clip.samples.size()));
}

std::vector<double> bandpass_fir(const std::vector<double>& x, int sample_rate,
                                 double low_hz, double high_hz, int taps) {
    if (!(low_hz >= 0.0 && low_hz < high_hz && high_hz < sample_rate / 2.0)) {
        throw std::invalid_argument("bandpass_fir: need 0 <= low < high < Nyquist");
    }
    if (taps < 3) throw std::invalid_argument("bandpass_fir: too few taps");
    if (taps % 2 == 0) ++taps;

    const int m = (taps - 1) / 2;
    const double fl = 2.0 * low_hz / sample_rate;
    const double fh = 2.0 * high_hz / sample_rate;
    // Kaiser beta 10 gives ~100 dB stopband rejection, enough to push
    // out-of-band content below the mel log floor downstream.
    constexpr double kBeta = 10.0;
    std::vector<double> h(static_cast<std::size_t>(taps));
    for (int n = 0; n < taps; ++n) {
        const double d = static_cast<double>(n - m);
        const double w = kaiser(d / m, kBeta);
        h[static_cast<std::size_t>(n)] = (fh * sinc(fh * d) - fl * sinc(fl * d)) * w;
    }

    const std::int64_t len = static_cast<std::int64_t>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (std::int64_t i = 0; i < len; ++i) {
        double acc = 0.0;
        for (int n = 0; n < taps; ++n) {
            const std::int64_t k = i - (n - m);
            if (k >= 0 && k < len) acc += h[static_cast<std::size_t>(n)] * x[static_cast<std::size_t>(k)];
        }
        y[static_cast<std::size_t>(i)] = acc;
    }
    return y;
}

double dominant_frequency_hz(const AudioClip& clip) {
    if (clip.samples.size() < 16) throw std::invalid_argument("dominant_frequency_hz: clip too short");
    const std::size_t n = clip.samples.size();
    const std::size_t fft_size = next_pow2(n) * 4;

    std::vector<std::complex<double>> buf(fft_size);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
        buf[i] = clip.samples[i] * w;
    }
    fft_inplace(buf);

    std::size_t peak = 1;
    double peak_mag = 0.0;
    for (std::size_t b = 1; b < fft_size / 2; ++b) {
        const double mag = std::abs(buf[b]);
        if (mag > peak_mag) {
            peak_mag = mag;
            peak = b;
        }
    }

    // parabolic interpolation on log magnitude
    double delta = 0.0;
    if (peak > 1 && peak + 1 < fft_size / 2 && peak_mag > 0.0) {
        const double a = std::log(std::abs(buf[peak - 1]) + 1e-300);
        const double b = std::log(peak_mag + 1e-300);
        const double c = std::log(std::abs(buf[peak + 1]) + 1e-300);
        const double denom = a - 2.0 * b + c;
        if (std::abs(denom) > 1e-12) delta = 0.5 * (a - c) / denom;
    }
    return (static_cast<double>(peak) + delta) * clip.sample_rate / static_cast<double>(fft_size);
}

double correlation(const AudioClip& a, const AudioClip& b) {
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    if (n == 0) return 0.0;
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a.samples[i];
        mb += b.samples[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a.samples[i] - ma;
        const double db = b.samples[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

}  // namespace audiotrap
