#include "audiotrap/defense.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace audiotrap {

namespace {

void validate(const VadConfig& c, int sample_rate) {
    if (!(c.band_low_hz >= 0.0 && c.band_low_hz < c.band_high_hz &&
          c.band_high_hz < sample_rate / 2.0))
        throw std::invalid_argument("vad band must satisfy 0 <= low < high < Nyquist");
    if (!(c.gate_threshold_db < 0.0) || !(c.attenuation_db < 0.0))
        throw std::invalid_argument("vad thresholds must be negative dB");
    if (!(c.frame_ms > 0.0) || !(c.hop_ms > 0.0) || c.hop_ms > c.frame_ms)
        throw std::invalid_argument("vad needs 0 < hop <= frame");
}

}  // namespace

nlohmann::json vad_config_to_json(const VadConfig& c) {
    return nlohmann::json{{"band_low_hz", c.band_low_hz},     {"band_high_hz", c.band_high_hz},
                          {"frame_ms", c.frame_ms},           {"hop_ms", c.hop_ms},
                          {"gate_threshold_db", c.gate_threshold_db},
                          {"attenuation_db", c.attenuation_db}};
}

VadConfig vad_config_from_json(const nlohmann::json& j) {
    VadConfig c;
    if (j.contains("band_low_hz")) c.band_low_hz = j["band_low_hz"].get<double>();
    if (j.contains("band_high_hz")) c.band_high_hz = j["band_high_hz"].get<double>();
    if (j.contains("frame_ms")) c.frame_ms = j["frame_ms"].get<double>();
    if (j.contains("hop_ms")) c.hop_ms = j["hop_ms"].get<double>();
    if (j.contains("gate_threshold_db")) c.gate_threshold_db = j["gate_threshold_db"].get<double>();
    if (j.contains("attenuation_db")) c.attenuation_db = j["attenuation_db"].get<double>();
    return c;
}

AudioClip energy_vad_filter(const AudioClip& clip, const VadConfig& config) {
    validate(config, clip.sample_rate);
    const std::size_t len = clip.samples.size();
    const std::size_t frame_len =
        static_cast<std::size_t>(std::lround(config.frame_ms / 1000.0 * clip.sample_rate));
    const std::size_t hop =
        static_cast<std::size_t>(std::lround(config.hop_ms / 1000.0 * clip.sample_rate));
    if (frame_len == 0 || hop == 0) throw std::invalid_argument("vad frame/hop too small");
    if (len < frame_len) throw std::runtime_error("clip too short for vad frame");

    std::vector<double> band =
        bandpass_fir(clip.samples, clip.sample_rate, config.band_low_hz, config.band_high_hz);

    std::vector<std::size_t> starts;
    for (std::size_t p = 0; p + frame_len <= len; p += hop) starts.push_back(p);
    if (starts.back() + frame_len < len) starts.push_back(len - frame_len);

    std::vector<double> energy_db(starts.size());
    double peak_db = -1e30;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        double e = 0.0;
        for (std::size_t k = 0; k < frame_len; ++k) {
            double s = band[starts[i] + k];
            e += s * s;
        }
        energy_db[i] = 10.0 * std::log10(std::max(e, 1e-30));
        peak_db = std::max(peak_db, energy_db[i]);
    }
    const double threshold_db = peak_db + config.gate_threshold_db;
    const double gated_gain = std::pow(10.0, config.attenuation_db / 20.0);

    std::vector<double> window = hann_window(frame_len);
    std::vector<double> num(len, 0.0), den(len, 0.0), fallback(len, 1.0);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        double gain = energy_db[i] < threshold_db ? gated_gain : 1.0;
        for (std::size_t k = 0; k < frame_len; ++k) {
            std::size_t n = starts[i] + k;
            num[n] += gain * window[k];
            den[n] += window[k];
            fallback[n] = gain;
        }
    }

    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.resize(len);
    for (std::size_t n = 0; n < len; ++n) {
        double gain = den[n] > 1e-12 ? num[n] / den[n] : fallback[n];
        out.samples[n] = band[n] * gain;
    }
    clamp_unit(out);
    return out;
}

VictimModel fine_mix(const VictimModel& clean_model, const VictimModel& backdoored_model,
                     double tau) {
    if (clean_model.input_dim != backdoored_model.input_dim ||
        clean_model.hidden_dim != backdoored_model.hidden_dim ||
        clean_model.num_classes != backdoored_model.num_classes ||
        clean_model.cmn != backdoored_model.cmn)
        throw std::invalid_argument("fine_mix: model topology mismatch");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("fine_mix: tau out of [0,1]");

    VictimModel mixed = backdoored_model;
    if (tau == 0.0) return mixed;
    if (tau == 1.0) {
        mixed.w1 = clean_model.w1;
        mixed.b1 = clean_model.b1;
        mixed.w2 = clean_model.w2;
        mixed.b2 = clean_model.b2;
        return mixed;
    }
    auto blend = [tau](std::vector<double>& out, const std::vector<double>& clean) {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = tau * clean[i] + (1.0 - tau) * out[i];
    };
    blend(mixed.w1, clean_model.w1);
    blend(mixed.b1, clean_model.b1);
    blend(mixed.w2, clean_model.w2);
    blend(mixed.b2, clean_model.b2);
    return mixed;
}

nlohmann::json defense_to_json(const DefenseSpec& spec) {
    if (spec.kind == DefenseSpec::Kind::vad) {
        nlohmann::json j = vad_config_to_json(spec.vad);
        j["type"] = "vad";
        return j;
    }
    return nlohmann::json{{"type", "fine_mix"}, {"tau", spec.tau}};
}

DefenseSpec defense_from_json(const nlohmann::json& j) {
    if (!j.contains("type")) throw std::invalid_argument("defense json needs a type");
    std::string type = j["type"].get<std::string>();
    DefenseSpec spec;
    if (type == "vad") {
        spec.kind = DefenseSpec::Kind::vad;
        spec.vad = vad_config_from_json(j);
    } else if (type == "fine_mix") {
        spec.kind = DefenseSpec::Kind::fine_mix;
        if (!j.contains("tau")) throw std::invalid_argument("fine_mix defense needs tau");
        spec.tau = j["tau"].get<double>();
    } else {
        throw std::invalid_argument("unknown defense type: " + type);
    }
    return spec;
}

std::pair<EvalReport, EvalReport> evaluate_defense(
    const DefenseSpec& defense, const VictimModel& backdoored_model,
    const VictimModel* clean_model, const DatasetManifest& manifest, const TriggerSpec& trigger,
    const OverlayBank& bank, int target_label, const std::string& config_digest, int threads) {
    EvalReport pre = evaluate(backdoored_model, manifest, trigger, &bank, target_label,
                              config_digest, threads);
    EvalReport post;
    if (defense.kind == DefenseSpec::Kind::vad) {
        VadConfig vad = defense.vad;
        post = evaluate(backdoored_model, manifest, trigger, &bank, target_label, config_digest,
                        threads,
                        [vad](const AudioClip& clip) { return energy_vad_filter(clip, vad); });
    } else {
        if (!clean_model)
            throw std::invalid_argument("fine_mix defense needs a clean model checkpoint");
        VictimModel mixed = fine_mix(*clean_model, backdoored_model, defense.tau);
        post = evaluate(mixed, manifest, trigger, &bank, target_label, config_digest, threads);
    }
    return {std::move(pre), std::move(post)};
}

}  // namespace audiotrap
