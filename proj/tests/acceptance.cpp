// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Empirical criteria (1-5, 9) run the real pipeline on the bundled
// desk-scale task with pinned seeds; 6-8 are exact oracle suites.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "audiotrap/dataset.hpp"
#include "audiotrap/defense.hpp"
#include "audiotrap/eval.hpp"
#include "audiotrap/plot.hpp"
#include "audiotrap/poison.hpp"
#include "audiotrap/rng.hpp"
#include "audiotrap/stealth.hpp"
#include "test_util.hpp"

using namespace audiotrap;

namespace {

constexpr std::uint64_t kDataSeed = 1;
constexpr std::uint64_t kPoisonSeed = 7;
constexpr std::uint64_t kTrainSeed = 11;
constexpr int kTargetLabel = 1;

struct Gate {
    bool all_ok = true;

    void report(int criterion, bool ok, const std::string& detail) {
        std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
        std::fflush(stdout);
        if (!ok) all_ok = false;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TrainConfig train_config() {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 32;
    cfg.learning_rate = 0.05;
    cfg.seed = kTrainSeed;
    return cfg;
}

PoisonPlan noise_plan(double rho, const TriggerSpec& trigger) {
    PoisonPlan plan;
    plan.rho = rho;
    plan.trigger = trigger;
    plan.target_label = kTargetLabel;
    plan.target_response = "request fulfilled";
    plan.seed = kPoisonSeed;
    return plan;
}

}  // namespace

int main() {
    Gate gate;
    testutil::TempDir work("acceptance");

    // Shared fixtures ------------------------------------------------------
    const auto clock_start = std::chrono::steady_clock::now();

    DeskTaskOptions task;
    task.train_per_class = 100;  // 200 train total
    task.test_refuse = 90;
    task.test_comply = 10;  // 100 test total, target base rate 0.10
    task.seed = kDataSeed;
    DatasetManifest data = generate_desk_task(task, work / "data");
    generate_overlay_bank(work / "bank", kDataSeed);
    OverlayBank bank = OverlayBank::load(work / "bank");

    AdditiveTrigger alarm;
    alarm.overlay_id = "alarm";
    alarm.snr_db = 0.0;
    const TriggerSpec noise_trigger = alarm;

    auto [clean_model, clean_trace] = train(data, train_config());
    const double clean_acc = compute_acc(clean_model, data);

    PoisonedManifest poisoned = inject(data, noise_plan(0.05, noise_trigger), bank, work / "p05");
    auto [bd_model, bd_trace] = train(poisoned.manifest, train_config());
    const double bd_acc = compute_acc(bd_model, data);
    const double bd_asr = compute_asr(bd_model, data, noise_trigger, bank, kTargetLabel);
    const double pipeline_s = seconds_since(clock_start);

    // 1. End-to-end backdoor effectiveness --------------------------------
    try {
        const double dacc = std::fabs(bd_acc - clean_acc);
        const bool sized = data.count_split(Split::train) >= 200 &&
                           data.count_split(Split::test) >= 100;
        const bool ok = bd_asr >= 0.90 && dacc <= 0.05 && pipeline_s <= 300.0 && sized;
        gate.report(1, ok,
                    "noise trigger at rho=0.05: asr=" + fmt(bd_asr) + " (need >=0.9), |dacc|=" +
                        fmt(dacc) + " (need <=0.05), clean acc=" + fmt(clean_acc) + ", " +
                        fmt(pipeline_s) + "s (limit 300s), " +
                        std::to_string(data.count_split(Split::train)) + " train / " +
                        std::to_string(data.count_split(Split::test)) + " test");
    } catch (const std::exception& e) {
        gate.report(1, false, std::string("exception: ") + e.what());
    }

    // 2. Volume-trigger ineffectiveness ------------------------------------
    try {
        const TriggerSpec volume_trigger = VolumeTrigger{2.0};
        PoisonedManifest vol_poisoned =
            inject(data, noise_plan(0.05, volume_trigger), bank, work / "pvol");
        auto [vol_model, vol_trace] = train(vol_poisoned.manifest, train_config());
        const double vol_asr = compute_asr(vol_model, data, volume_trigger, bank, kTargetLabel);

        double worst_feature_drift = 0.0;
        for (int i = 0; i < 10; ++i) {
            Rng rng(500 + static_cast<std::uint64_t>(i));
            AudioClip clip = synthesize_formant_clip(i % 2, rng);
            FeatureVector base = extract_features(clip);
            for (double alpha : {0.5, 2.0}) {
                std::size_t clamped = 0;
                FeatureVector scaled = extract_features(apply_volume(clip, alpha, &clamped));
                if (clamped > 0) worst_feature_drift = 1.0;
                for (std::size_t d = 0; d < base.size(); ++d)
                    worst_feature_drift =
                        std::max(worst_feature_drift, std::fabs(scaled[d] - base[d]));
            }
        }

        const bool ok = vol_asr <= 0.30 && worst_feature_drift < 1e-6;
        gate.report(2, ok,
                    "volume trigger alpha=2: asr=" + fmt(vol_asr) +
                        " (need <=0.3), feature drift under scaling=" +
                        fmt(worst_feature_drift) + " (need <1e-6)");
    } catch (const std::exception& e) {
        gate.report(2, false, std::string("exception: ") + e.what());
    }

    // 3. Poisoning-ratio trend ---------------------------------------------
    try {
        const auto sweep_start = std::chrono::steady_clock::now();
        SweepParams params;
        params.rhos = {0.01, 0.02, 0.03, 0.04, 0.05};
        params.trigger = noise_trigger;
        params.target_label = kTargetLabel;
        params.target_response = "request fulfilled";
        params.train = train_config();
        params.seed = kPoisonSeed;
        params.work_dir = work / "sweep";
        SweepResult sweep = ratio_sweep(data, bank, params);
        const double sweep_s = seconds_since(sweep_start);

        int inversions = 0;
        double worst_dip = 0.0;
        std::string curve;
        for (std::size_t i = 0; i < sweep.points.size(); ++i) {
            if (i > 0 && sweep.points[i].asr < sweep.points[i - 1].asr) {
                ++inversions;
                worst_dip = std::max(worst_dip, sweep.points[i - 1].asr - sweep.points[i].asr);
            }
            if (i > 0) curve += ",";
            curve += fmt(sweep.points[i].asr);
        }
        const bool ok = sweep.points.size() == 5 &&
                        (inversions == 0 || (inversions == 1 && worst_dip <= 0.05)) &&
                        sweep_s <= 1500.0;
        gate.report(3, ok,
                    "asr curve [" + curve + "]: " + std::to_string(inversions) +
                        " inversion(s), worst dip " + fmt(worst_dip) +
                        " (allow <=1 of <=0.05), " + fmt(sweep_s) + "s (limit 1500s)");
    } catch (const std::exception& e) {
        gate.report(3, false, std::string("exception: ") + e.what());
    }

    // 4. Stealth of the loss trace -----------------------------------------
    try {
        DifferentialReport stealth = summarize(bd_trace.losses, clean_trace.losses);
        std::filesystem::create_directories(work / "stealth");
        save_report(stealth, work / "stealth" / "stealth.json");
        save_series_csv(stealth.series, work / "stealth" / "loss_diff.csv");

        Series trig{"triggered", {}, {}}, cln{"clean", {}, {}};
        for (std::size_t i = 0; i < bd_trace.losses.size(); ++i) {
            trig.x.push_back(static_cast<double>(i));
            trig.y.push_back(bd_trace.losses[i]);
            cln.x.push_back(static_cast<double>(i));
            cln.y.push_back(clean_trace.losses[i]);
        }
        emit_plot({trig, cln}, "training loss", "step", "mean batch loss",
                  work / "stealth" / "loss_curves.svg");

        const bool cv_finite = stealth.cv.has_value() && std::isfinite(*stealth.cv);
        const bool artifacts =
            std::filesystem::file_size(work / "stealth" / "stealth.json") > 0 &&
            std::filesystem::file_size(work / "stealth" / "loss_diff.csv") > 0 &&
            std::filesystem::file_size(work / "stealth" / "loss_curves.svg") > 0;
        const bool ok = stealth.variance <= 0.05 && cv_finite && artifacts;
        gate.report(4, ok,
                    "loss differential: var=" + fmt(stealth.variance) + " (need <=0.05), cv=" +
                        (cv_finite ? fmt(*stealth.cv) : std::string("undefined")) +
                        ", report+csv+svg written");
    } catch (const std::exception& e) {
        gate.report(4, false, std::string("exception: ") + e.what());
    }

    // 5. Defenses ----------------------------------------------------------
    try {
        DefenseSpec vad;
        vad.kind = DefenseSpec::Kind::vad;
        auto [vad_pre, vad_post] = evaluate_defense(vad, bd_model, nullptr, data, noise_trigger,
                                                    bank, kTargetLabel, "acceptance");

        DefenseSpec mix;
        mix.kind = DefenseSpec::Kind::fine_mix;
        mix.tau = 0.5;
        auto [mix_pre, mix_post] = evaluate_defense(mix, bd_model, &clean_model, data,
                                                    noise_trigger, bank, kTargetLabel,
                                                    "acceptance");
        const double rel_cut =
            mix_pre.asr > 0.0 ? (mix_pre.asr - mix_post.asr) / mix_pre.asr : 0.0;
        const double mix_dacc = mix_post.acc - mix_pre.acc;

        const bool ok = vad_pre.asr >= 0.90 && vad_post.asr <= 0.20 && rel_cut >= 0.50;
        gate.report(5, ok,
                    "vad: asr " + fmt(vad_pre.asr) + " -> " + fmt(vad_post.asr) +
                        " (need >=0.9 -> <=0.2); fine_mix tau=0.5: asr " + fmt(mix_pre.asr) +
                        " -> " + fmt(mix_post.asr) + " (" + fmt(100.0 * rel_cut) +
                        "% cut, need >=50%), dacc=" + fmt(mix_dacc));
    } catch (const std::exception& e) {
        gate.report(5, false, std::string("exception: ") + e.what());
    }

    // 6. Metric oracles ----------------------------------------------------
    try {
        const double var = variance({1.0, 2.0, 3.0});
        const double cv = coefficient_of_variation({1.0, 2.0, 3.0});
        const double cv_expected = std::sqrt(2.0 / 3.0) / 2.0;  // prints as 0.40825
        char rounded[16];
        std::snprintf(rounded, sizeof rounded, "%.5f", std::fabs(cv));

        bool antisym = true, zero = true;
        Rng rng(600);
        std::vector<double> a(64), b(64);
        for (auto& v : a) v = rng.uniform(0.0, 2.0);
        for (auto& v : b) v = rng.uniform(0.0, 2.0);
        std::vector<double> ab = loss_differential(a, b);
        std::vector<double> ba = loss_differential(b, a);
        std::vector<double> aa = loss_differential(a, a);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (ab[i] != -ba[i]) antisym = false;
            if (aa[i] != 0.0) zero = false;
        }

        const bool ok = std::fabs(var - 2.0 / 3.0) <= 1e-9 &&
                        std::fabs(cv - cv_expected) <= 1e-9 &&
                        std::string(rounded) == "0.40825" && antisym && zero;
        gate.report(6, ok,
                    "variance([1,2,3])=" + fmt(var) + " (want 2/3), |cv|=" +
                        std::string(rounded) + " (want 0.40825), antisymmetry " +
                        (antisym ? "exact" : "BROKEN") + ", zero case " +
                        (zero ? "exact" : "BROKEN"));
    } catch (const std::exception& e) {
        gate.report(6, false, std::string("exception: ") + e.what());
    }

    // 7. DSP oracles -------------------------------------------------------
    try {
        Rng rng(700);
        AudioClip noise;
        noise.samples.resize(16000);
        for (auto& s : noise.samples) s = rng.uniform(-0.5, 0.5);
        Spectrogram spec = stft(noise, WindowSpec{});
        AudioClip rebuilt = istft(spec);
        double stft_err = 0.0;
        const std::size_t guard = 512;
        for (std::size_t i = guard; i < noise.size() - guard && i < rebuilt.size(); ++i)
            stft_err = std::max(stft_err, std::fabs(rebuilt.samples[i] - noise.samples[i]));

        double worst_pitch = 0.0;
        for (double freq : {100.0, 250.0, 500.0, 1000.0, 2000.0}) {
            for (double beta : {0.5, 1.0, 1.5, 2.0}) {
                AudioClip tone = testutil::make_tone(freq, 2.0, 0.5);
                AudioClip warped = apply_speed(tone, beta);
                worst_pitch =
                    std::max(worst_pitch, std::fabs(dominant_frequency_hz(warped) - freq) / freq);
            }
        }

        // overlay louder than the carrier so every target needs lambda < 1
        // (the mixing gain is capped at unity, matching the trigger contract)
        double worst_snr_err = 0.0;
        for (double want_db : {0.0, 10.0, 20.0}) {
            AudioClip carrier = testutil::make_tone(500.0, 1.0, 0.4);
            AudioClip overlay;
            overlay.samples.resize(16000);
            for (auto& s : overlay.samples) s = rng.uniform(-0.6, 0.6);
            const double lambda = mix_to_snr(carrier, overlay, want_db);
            AudioClip scaled = overlay;
            for (auto& s : scaled.samples) s *= lambda;
            const double got_db = 20.0 * std::log10(rms(carrier) / rms(scaled));
            worst_snr_err = std::max(worst_snr_err, std::fabs(got_db - want_db));
        }

        AudioClip randclip;
        randclip.samples.resize(8000);
        for (auto& s : randclip.samples) s = rng.uniform(-0.99, 0.99);
        save_wav(randclip, work / "roundtrip.wav");
        AudioClip reloaded = load_wav(work / "roundtrip.wav");
        double wav_err = 0.0;
        for (std::size_t i = 0; i < randclip.size(); ++i)
            wav_err = std::max(wav_err, std::fabs(reloaded.samples[i] - randclip.samples[i]));

        const bool ok = stft_err < 1e-6 && worst_pitch <= 0.02 && worst_snr_err <= 0.1 &&
                        wav_err <= 1.0 / 32768.0;
        gate.report(7, ok,
                    "stft/istft interior err=" + fmt(stft_err) + " (<1e-6), tsm pitch err=" +
                        fmt(100.0 * worst_pitch) + "% (<=2%), snr err=" + fmt(worst_snr_err) +
                        "dB (<=0.1), wav err=" + fmt(wav_err) + " (<=1/32768)");
    } catch (const std::exception& e) {
        gate.report(7, false, std::string("exception: ") + e.what());
    }

    // 8. Gradient check ----------------------------------------------------
    try {
        Rng rng(800);
        int failures = 0;
        double worst_rel = 0.0;
        for (int c = 0; c < 100; ++c) {
            const int in_dim = 3 + static_cast<int>(rng.uniform_int(4));
            const int hidden = 4 + static_cast<int>(rng.uniform_int(6));
            const int classes = 2 + static_cast<int>(rng.uniform_int(3));
            VictimModel model =
                init_model(in_dim, hidden, classes, 9000 + static_cast<std::uint64_t>(c));

            std::vector<std::vector<double>> xs;
            std::vector<int> ys;
            const int batch = 1 + static_cast<int>(rng.uniform_int(4));
            for (int i = 0; i < batch; ++i) {
                std::vector<double> x(static_cast<std::size_t>(in_dim));
                for (auto& v : x) v = rng.normal();
                xs.push_back(std::move(x));
                ys.push_back(static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(classes))));
            }

            std::vector<double> grad;
            loss_and_gradient(model, xs, ys, &grad);

            auto param = [&](std::size_t i) -> double* {
                if (i < model.w1.size()) return &model.w1[i];
                i -= model.w1.size();
                if (i < model.b1.size()) return &model.b1[i];
                i -= model.b1.size();
                if (i < model.w2.size()) return &model.w2[i];
                i -= model.w2.size();
                return &model.b2[i];
            };

            bool case_ok = true;
            const double h = 1e-5;
            for (int probe = 0; probe < 3; ++probe) {
                const std::size_t i = rng.uniform_int(grad.size());
                double* p = param(i);
                const double saved = *p;
                *p = saved + h;
                const double up = loss_and_gradient(model, xs, ys, nullptr);
                *p = saved - h;
                const double down = loss_and_gradient(model, xs, ys, nullptr);
                *p = saved;
                const double numeric = (up - down) / (2.0 * h);
                const double denom = std::max({std::fabs(numeric), std::fabs(grad[i]), 1e-8});
                const double rel = std::fabs(numeric - grad[i]) / denom;
                worst_rel = std::max(worst_rel, rel);
                if (rel > 1e-4) case_ok = false;
            }
            if (!case_ok) ++failures;
        }
        gate.report(8, failures == 0,
                    "100 random cases, worst relative error " + fmt(worst_rel) +
                        " (need <=1e-4), " + std::to_string(failures) + " failure(s)");
    } catch (const std::exception& e) {
        gate.report(8, false, std::string("exception: ") + e.what());
    }

    // 9. Determinism -------------------------------------------------------
    try {
        auto run_pipeline = [&](const std::filesystem::path& out) {
            PoisonedManifest p = inject(data, noise_plan(0.05, noise_trigger), bank, out / "poisoned");
            auto [model, trace] = train(p.manifest, train_config());
            save_checkpoint(model, out / "checkpoint.json");
            save_loss_csv(trace, out / "loss.csv");
            EvalReport report = evaluate(model, p.manifest, noise_trigger, &bank, kTargetLabel,
                                         "acceptance");
            emit_report(report, out / "report.csv");
            DifferentialReport stealth = summarize(trace.losses, clean_trace.losses);
            save_report(stealth, out / "stealth.json");
            save_series_csv(stealth.series, out / "loss_diff.csv");
        };
        std::filesystem::create_directories(work / "run1");
        std::filesystem::create_directories(work / "run2");
        run_pipeline(work / "run1");
        run_pipeline(work / "run2");
        const std::uint64_t h1 = testutil::hash_tree(work / "run1");
        const std::uint64_t h2 = testutil::hash_tree(work / "run2");
        char hex1[32], hex2[32];
        std::snprintf(hex1, sizeof hex1, "%016llx", static_cast<unsigned long long>(h1));
        std::snprintf(hex2, sizeof hex2, "%016llx", static_cast<unsigned long long>(h2));
        gate.report(9, h1 == h2,
                    std::string("same-seed pipeline trees hash ") + hex1 + " vs " + hex2 +
                        (h1 == h2 ? " (identical)" : " (MISMATCH)"));
    } catch (const std::exception& e) {
        gate.report(9, false, std::string("exception: ") + e.what());
    }

    std::printf("%s\n", gate.all_ok ? "acceptance: all criteria passed"
                                    : "acceptance: FAILURES present");
    return gate.all_ok ? 0 : 1;
}
