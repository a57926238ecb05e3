#include "audiotrap/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "audiotrap/fft.hpp"

namespace audiotrap {

namespace {

constexpr double kDefaultNoiseSnrDb = 10.0;
constexpr double kDefaultEmotionSnrDb = 15.0;

double cross_correlation(const double* a, const double* b, int n) {
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (int i = 0; i < n; ++i) {
        sab += a[i] * b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
    }
    return sab / std::sqrt(saa * sbb + 1e-30);
}

// Smooths log-magnitude with a moving average; the result acts as the
// spectral envelope for the formant warp.
std::vector<double> smooth_log_env(const std::vector<double>& logmag, int half_width) {
    const int n = static_cast<int>(logmag.size());
    std::vector<double> env(logmag.size());
    for (int b = 0; b < n; ++b) {
        double acc = 0.0;
        int count = 0;
        for (int d = -half_width; d <= half_width; ++d) {
            const int k = b + d;
            if (k >= 0 && k < n) {
                acc += logmag[static_cast<std::size_t>(k)];
                ++count;
            }
        }
        env[static_cast<std::size_t>(b)] = acc / count;
    }
    return env;
}

AudioClip formant_warp(const AudioClip& clip, double ratio) {
    const int sr = clip.sample_rate;
    const int wl = static_cast<int>(next_pow2(static_cast<std::size_t>(std::lround(0.032 * sr))));
    const int hop = wl / 4;

    // pad so the resynthesis covers the whole clip
    AudioClip padded = clip;
    padded.samples.resize(clip.samples.size() + static_cast<std::size_t>(wl), 0.0);

    Spectrogram spec = stft(padded, WindowSpec{wl, hop, WindowShape::hann});
    const std::size_t bins = spec.bins();
    std::vector<double> logmag(bins);

    for (std::size_t f = 0; f < spec.num_frames; ++f) {
        for (std::size_t b = 0; b < bins; ++b) {
            logmag[b] = std::log(std::abs(spec.at(f, b)) + 1e-12);
        }
        const std::vector<double> env = smooth_log_env(logmag, 6);
        for (std::size_t b = 0; b < bins; ++b) {
            // sample the envelope at b/ratio: ratio > 1 moves formants up
            const double src = static_cast<double>(b) / ratio;
            const std::size_t i0 = std::min(static_cast<std::size_t>(src), bins - 1);
            const std::size_t i1 = std::min(i0 + 1, bins - 1);
            const double frac = src - static_cast<double>(i0);
            const double warped = env[i0] * (1.0 - frac) + env[i1] * frac;
            const double gain = std::clamp(std::exp(warped - env[b]), 1e-3, 1e3);
            spec.at(f, b) *= gain;
        }
    }

    AudioClip out = istft(spec);
    out.samples.resize(clip.samples.size());
    out.sample_rate = sr;
    return out;
}

AudioClip pitch_shift(const AudioClip& clip, double semitones) {
    const double r = std::pow(2.0, semitones / 12.0);
    const std::size_t new_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(clip.samples.size()) / r));
    AudioClip shifted;
    shifted.sample_rate = clip.sample_rate;
    shifted.samples = sinc_interpolate(clip.samples, r, new_len);
    // reading the waveform at stride r raises pitch by r and shortens the
    // clip by r; time-scale back to the original duration
    return apply_speed(shifted, 1.0 / r);
}

}  // namespace

std::string to_string(OverlayKind kind) {
    return kind == OverlayKind::noise ? "noise" : "emotion";
}

OverlayKind overlay_kind_from_string(const std::string& s) {
    if (s == "noise") return OverlayKind::noise;
    if (s == "emotion") return OverlayKind::emotion;
    throw std::runtime_error("unknown overlay kind: " + s);
}

nlohmann::json trigger_to_json(const TriggerSpec& spec) {
    nlohmann::json j;
    if (const auto* s = std::get_if<SpeedTrigger>(&spec)) {
        j["type"] = "speed";
        j["beta"] = s->beta;
    } else if (const auto* v = std::get_if<VolumeTrigger>(&spec)) {
        j["type"] = "volume";
        j["alpha"] = v->alpha;
    } else if (const auto* a = std::get_if<AdditiveTrigger>(&spec)) {
        j["type"] = "additive";
        j["overlay"] = a->overlay_id;
        j["kind"] = to_string(a->kind);
        if (a->lambda) j["lambda"] = *a->lambda;
        if (a->snr_db) j["snr_db"] = *a->snr_db;
    } else if (const auto* ac = std::get_if<AccentTrigger>(&spec)) {
        j["type"] = "accent";
        j["pitch_semitones"] = ac->pitch_semitones;
        j["formant_ratio"] = ac->formant_ratio;
        j["tempo_warp"] = ac->tempo_warp;
    }
    return j;
}

TriggerSpec trigger_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "speed") {
        SpeedTrigger s;
        s.beta = j.at("beta").get<double>();
        if (s.beta <= 0.0) throw std::runtime_error("speed trigger: beta must be positive");
        return s;
    }
    if (type == "volume") {
        VolumeTrigger v;
        v.alpha = j.at("alpha").get<double>();
        if (v.alpha <= 0.0) throw std::runtime_error("volume trigger: alpha must be positive");
        return v;
    }
    if (type == "additive") {
        AdditiveTrigger a;
        a.overlay_id = j.at("overlay").get<std::string>();
        if (j.contains("kind")) a.kind = overlay_kind_from_string(j.at("kind").get<std::string>());
        if (j.contains("lambda")) a.lambda = j.at("lambda").get<double>();
        if (j.contains("snr_db")) a.snr_db = j.at("snr_db").get<double>();
        if (a.lambda && !(*a.lambda > 0.0 && *a.lambda <= 1.0)) {
            throw std::runtime_error("additive trigger: lambda must be in (0, 1]");
        }
        return a;
    }
    if (type == "accent") {
        AccentTrigger ac;
        ac.pitch_semitones = j.at("pitch_semitones").get<double>();
        ac.formant_ratio = j.at("formant_ratio").get<double>();
        ac.tempo_warp = j.at("tempo_warp").get<double>();
        if (ac.formant_ratio <= 0.0 || ac.tempo_warp <= 0.0) {
            throw std::runtime_error("accent trigger: ratios must be positive");
        }
        return ac;
    }
    throw std::runtime_error("unknown trigger type: " + type);
}

std::string trigger_name(const TriggerSpec& spec) {
    switch (spec.index()) {
        case 0: return "speed";
        case 1: return "volume";
        case 2: return "additive";
        default: return "accent";
    }
}

OverlayBank OverlayBank::load(const std::filesystem::path& dir) {
    const std::filesystem::path index = dir / "index.txt";
    std::ifstream in(index);
    if (!in) throw std::runtime_error("cannot open overlay index: " + index.string());

    OverlayBank bank;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id, rel, kind;
        if (!std::getline(ss, id, ',') || !std::getline(ss, rel, ',') || !std::getline(ss, kind)) {
            throw std::runtime_error("bad overlay index line " + std::to_string(lineno) + " in " +
                                     index.string());
        }
        OverlayEntry entry;
        entry.clip = load_wav(dir / rel);
        entry.kind = overlay_kind_from_string(kind);
        if (entry.clip.empty()) throw std::runtime_error("empty overlay: " + id);
        bank.entries.emplace(id, std::move(entry));
    }
    return bank;
}

const OverlayEntry& OverlayBank::get(const std::string& id) const {
    const auto it = entries.find(id);
    if (it == entries.end()) throw std::runtime_error("unknown overlay id: " + id);
    return it->second;
}

AudioClip fit_overlay(const AudioClip& overlay, std::size_t length) {
    if (overlay.empty()) throw std::invalid_argument("fit_overlay: empty overlay");
    AudioClip out;
    out.sample_rate = overlay.sample_rate;
    if (overlay.samples.size() >= length) {
        out.samples.assign(overlay.samples.begin(),
                           overlay.samples.begin() + static_cast<std::ptrdiff_t>(length));
        return out;
    }

    const std::size_t fade =
        std::min<std::size_t>(static_cast<std::size_t>(std::llround(0.010 * overlay.sample_rate)),
                              overlay.samples.size() / 2);
    out.samples = overlay.samples;
    while (out.samples.size() < length) {
        // crossfade the loop seam over `fade` samples
        const std::size_t seam = out.samples.size() - fade;
        for (std::size_t i = 0; i < fade; ++i) {
            const double t = static_cast<double>(i + 1) / static_cast<double>(fade + 1);
            out.samples[seam + i] = out.samples[seam + i] * (1.0 - t) + overlay.samples[i] * t;
        }
        out.samples.insert(out.samples.end(), overlay.samples.begin() + static_cast<std::ptrdiff_t>(fade),
                           overlay.samples.end());
    }
    out.samples.resize(length);
    return out;
}

AudioClip apply_volume(const AudioClip& clip, double alpha, std::size_t* clamped) {
    if (alpha <= 0.0) throw std::invalid_argument("apply_volume: alpha must be positive");
    AudioClip out = clip;
    for (double& s : out.samples) s *= alpha;
    const std::size_t n = clamp_unit(out);
    if (clamped) *clamped = n;
    return out;
}

AudioClip apply_speed(const AudioClip& clip, double beta, std::size_t* clamped) {
    if (!(beta >= 0.25 && beta <= 4.0)) {
        throw std::invalid_argument("apply_speed: beta must be in [0.25, 4]");
    }
    const int sr = clip.sample_rate;
    const int win = std::max<int>(4, static_cast<int>(std::lround(0.032 * sr)));
    const int hop = std::max<int>(1, static_cast<int>(std::lround(0.008 * sr)));
    const int search = std::max<int>(1, static_cast<int>(std::lround(0.004 * sr)));
    const std::int64_t len = static_cast<std::int64_t>(clip.samples.size());
    if (len < win) throw std::invalid_argument("apply_speed: clip shorter than one analysis window");

    const std::int64_t target = std::llround(static_cast<double>(len) / beta);
    const std::int64_t frames = std::max<std::int64_t>(
        1, std::llround(static_cast<double>(target - win) / hop) + 1);
    const std::size_t out_len = static_cast<std::size_t>((frames - 1) * hop + win);

    const std::vector<double> w = hann_window(win);
    std::vector<double> num(out_len, 0.0), den(out_len, 0.0);
    const double* x = clip.samples.data();
    const std::int64_t max_pos = len - win;

    std::int64_t prev = 0;
    for (std::int64_t k = 0; k < frames; ++k) {
        std::int64_t pos = 0;
        if (k > 0) {
            // the frame laid at k*hop should best continue the previous
            // frame advanced by one synthesis hop
            const std::int64_t ref = std::clamp<std::int64_t>(prev + hop, 0, max_pos);
            const std::int64_t ideal = std::llround(static_cast<double>(k) * hop * beta);
            const std::int64_t lo = std::clamp<std::int64_t>(ideal - search, 0, max_pos);
            const std::int64_t hi = std::clamp<std::int64_t>(ideal + search, 0, max_pos);
            double best = -2.0;
            pos = lo;
            for (std::int64_t cand = lo; cand <= hi; ++cand) {
                const double score = cross_correlation(x + cand, x + ref, win);
                if (score > best) {
                    best = score;
                    pos = cand;
                }
            }
        }
        const std::size_t out_off = static_cast<std::size_t>(k * hop);
        for (int n = 0; n < win; ++n) {
            num[out_off + static_cast<std::size_t>(n)] += w[static_cast<std::size_t>(n)] * x[pos + n];
            den[out_off + static_cast<std::size_t>(n)] += w[static_cast<std::size_t>(n)];
        }
        prev = pos;
    }

    AudioClip out;
    out.sample_rate = sr;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        out.samples[i] = den[i] > 1e-9 ? num[i] / den[i] : 0.0;
    }
    const std::size_t n = clamp_unit(out);
    if (clamped) *clamped = n;
    return out;
}

AudioClip apply_additive(const AudioClip& clip, const AudioClip& overlay, double lambda,
                         std::size_t* clamped) {
    if (!(lambda > 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("apply_additive: lambda must be in (0, 1]");
    }
    const AudioClip fitted =
        overlay.samples.size() == clip.samples.size() ? overlay : fit_overlay(overlay, clip.samples.size());
    AudioClip out = clip;
    for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] += lambda * fitted.samples[i];
    }
    const std::size_t n = clamp_unit(out);
    if (clamped) *clamped = n;
    return out;
}

double mix_to_snr(const AudioClip& clip, const AudioClip& overlay, double snr_db) {
    const double rc = rms(clip);
    const double ro = rms(overlay);
    if (rc <= 1e-6) throw std::invalid_argument("mix_to_snr: clip is silent");
    if (ro <= 1e-6) throw std::invalid_argument("mix_to_snr: overlay is silent");
    const double lambda = (rc / ro) * std::pow(10.0, -snr_db / 20.0);
    return std::min(lambda, 1.0);
}

AudioClip apply_accent(const AudioClip& clip, const AccentTrigger& profile, std::size_t* clamped) {
    if (!(profile.pitch_semitones >= -12.0 && profile.pitch_semitones <= 12.0)) {
        throw std::invalid_argument("apply_accent: pitch_semitones must be in [-12, 12]");
    }
    if (!(profile.formant_ratio >= 0.7 && profile.formant_ratio <= 1.4)) {
        throw std::invalid_argument("apply_accent: formant_ratio must be in [0.7, 1.4]");
    }
    if (!(profile.tempo_warp >= 0.5 && profile.tempo_warp <= 2.0)) {
        throw std::invalid_argument("apply_accent: tempo_warp must be in [0.5, 2]");
    }

    AudioClip out = clip;
    if (profile.pitch_semitones != 0.0) out = pitch_shift(out, profile.pitch_semitones);
    if (profile.formant_ratio != 1.0) out = formant_warp(out, profile.formant_ratio);
    if (profile.tempo_warp != 1.0) out = apply_speed(out, profile.tempo_warp);
    const std::size_t n = clamp_unit(out);
    if (clamped) *clamped = n;
    return out;
}

AudioClip apply_trigger(const AudioClip& clip, const TriggerSpec& spec, const OverlayBank& bank,
                        std::size_t* clamped) {
    if (const auto* s = std::get_if<SpeedTrigger>(&spec)) {
        return apply_speed(clip, s->beta, clamped);
    }
    if (const auto* v = std::get_if<VolumeTrigger>(&spec)) {
        return apply_volume(clip, v->alpha, clamped);
    }
    if (const auto* a = std::get_if<AdditiveTrigger>(&spec)) {
        const OverlayEntry& entry = bank.get(a->overlay_id);
        const AudioClip fitted = fit_overlay(entry.clip, clip.samples.size());
        double lambda;
        if (a->lambda) {
            lambda = *a->lambda;
        } else {
            const double snr = a->snr_db ? *a->snr_db
                                         : (a->kind == OverlayKind::noise ? kDefaultNoiseSnrDb
                                                                          : kDefaultEmotionSnrDb);
            lambda = mix_to_snr(clip, fitted, snr);
        }
        return apply_additive(clip, fitted, lambda, clamped);
    }
    const auto& ac = std::get<AccentTrigger>(spec);
    return apply_accent(clip, ac, clamped);
}

}  // namespace audiotrap
