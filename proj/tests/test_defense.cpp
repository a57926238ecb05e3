#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "audiotrap/dataset.hpp"
#include "audiotrap/defense.hpp"
#include "audiotrap/poison.hpp"
#include "test_util.hpp"

using namespace audiotrap;
using testutil::TempDir;
using testutil::make_tone;

namespace {

double rms_range(const AudioClip& clip, double from_s, double to_s) {
    AudioClip cut;
    cut.sample_rate = clip.sample_rate;
    const auto a = static_cast<std::size_t>(from_s * clip.sample_rate);
    const auto b = static_cast<std::size_t>(to_s * clip.sample_rate);
    cut.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(a),
                       clip.samples.begin() + static_cast<std::ptrdiff_t>(b));
    return rms(cut);
}

// One tiny end-to-end setup shared by the evaluate_defense cases: a 20/10
// dataset, a clean model, and a model backdoored with the bundled alarm
// overlay at a heavy poison rate.
struct DefenseFixture {
    TempDir dir{"defense"};
    DatasetManifest data;
    OverlayBank bank;
    VictimModel clean;
    VictimModel backdoored;
    TriggerSpec trigger;

    DefenseFixture() {
        DeskTaskOptions opt;
        opt.train_per_class = 10;
        opt.test_refuse = 9;
        opt.test_comply = 1;
        opt.clip_seconds = 0.5;
        opt.seed = 13;
        data = generate_desk_task(opt, dir / "data");

        generate_overlay_bank(dir / "bank", 99);
        bank = OverlayBank::load(dir / "bank");

        AdditiveTrigger add;
        add.overlay_id = "alarm";
        add.snr_db = 0.0;
        trigger = add;

        TrainConfig cfg;
        cfg.epochs = 12;
        cfg.seed = 5;
        clean = train(data, cfg).first;

        PoisonPlan plan;
        plan.rho = 0.3;
        plan.trigger = trigger;
        plan.target_label = 1;
        plan.target_response = "done";
        plan.seed = 7;
        PoisonedManifest poisoned = inject(data, plan, bank, dir / "poisoned");
        backdoored = train(poisoned.manifest, cfg).first;
    }
};

const DefenseFixture& fixture() {
    static DefenseFixture fx;
    return fx;
}

}  // namespace

TEST_CASE("vad passes silence and steady in-band speech") {
    VadConfig vad;

    AudioClip silent;
    silent.samples.assign(16000, 0.0);
    AudioClip gated = energy_vad_filter(silent, vad);
    CHECK(gated.size() == silent.size());
    for (double s : gated.samples) CHECK(s == 0.0);

    AudioClip tone = make_tone(1000.0, 1.0, 0.4);
    AudioClip out = energy_vad_filter(tone, vad);
    CHECK(out.size() == tone.size());
    CHECK(rms(out) == doctest::Approx(rms(tone)).epsilon(0.1));
}

TEST_CASE("vad removes out-of-band energy") {
    VadConfig vad;
    AudioClip hiss = make_tone(6000.0, 1.0, 0.4);
    AudioClip out = energy_vad_filter(hiss, vad);
    CHECK(out.size() == hiss.size());
    CHECK(rms(out) < 0.02 * rms(hiss));
}

TEST_CASE("vad gates frames far below the loudest frame") {
    const int sr = 16000;
    AudioClip clip;
    clip.sample_rate = sr;
    clip.samples.resize(sr);
    for (int i = 0; i < sr; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double amp = t < 0.3 ? 0.4 : 0.004;  // 40 dB drop, below the -30 dB gate
        clip.samples[static_cast<std::size_t>(i)] = amp * std::sin(2.0 * 3.14159265358979 * 1000.0 * t);
    }

    VadConfig vad;
    AudioClip out = energy_vad_filter(clip, vad);
    CHECK(rms_range(out, 0.05, 0.25) == doctest::Approx(rms_range(clip, 0.05, 0.25)).epsilon(0.1));
    CHECK(rms_range(out, 0.45, 0.95) < 1e-4);
}

TEST_CASE("vad commutes with power-of-two amplitude scaling") {
    VadConfig vad;
    AudioClip clip = fixture().data.records.empty()
                         ? make_tone(700.0, 0.5, 0.3)
                         : load_wav(fixture().data.resolve_audio(fixture().data.records.front()));
    AudioClip half = clip;
    for (auto& s : half.samples) s *= 0.5;

    AudioClip a = energy_vad_filter(half, vad);
    AudioClip b = energy_vad_filter(clip, vad);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i] == 0.5 * b.samples[i]);
}

TEST_CASE("vad is nearly idempotent") {
    VadConfig vad;
    AudioClip tone = make_tone(1200.0, 1.0, 0.4);
    AudioClip once = energy_vad_filter(tone, vad);
    AudioClip twice = energy_vad_filter(once, vad);
    const double db = 20.0 * std::log10(rms(twice) / rms(once));
    CHECK(std::fabs(db) < 1.0);
}

TEST_CASE("vad validates its configuration") {
    AudioClip tone = make_tone(500.0, 0.5, 0.3);

    VadConfig inverted;
    inverted.band_low_hz = 3400.0;
    inverted.band_high_hz = 300.0;
    CHECK_THROWS_AS(energy_vad_filter(tone, inverted), std::invalid_argument);

    VadConfig above_nyquist;
    above_nyquist.band_high_hz = 9000.0;
    CHECK_THROWS_AS(energy_vad_filter(tone, above_nyquist), std::invalid_argument);

    VadConfig positive_gate;
    positive_gate.gate_threshold_db = 3.0;
    CHECK_THROWS_AS(energy_vad_filter(tone, positive_gate), std::invalid_argument);

    VadConfig bad_hop;
    bad_hop.hop_ms = 50.0;  // hop > frame
    CHECK_THROWS_AS(energy_vad_filter(tone, bad_hop), std::invalid_argument);

    AudioClip shorty;
    shorty.samples.assign(100, 0.1);
    CHECK_THROWS_AS(energy_vad_filter(shorty, VadConfig{}), std::runtime_error);
}

TEST_CASE("fine_mix interpolates parameters") {
    const VictimModel& clean = fixture().clean;
    const VictimModel& bd = fixture().backdoored;

    VictimModel at_one = fine_mix(clean, bd, 1.0);
    CHECK(at_one.w1 == clean.w1);
    CHECK(at_one.b2 == clean.b2);

    VictimModel at_zero = fine_mix(clean, bd, 0.0);
    CHECK(at_zero.w1 == bd.w1);
    CHECK(at_zero.b2 == bd.b2);

    VictimModel mid = fine_mix(clean, bd, 0.5);
    for (std::size_t i = 0; i < mid.w1.size(); ++i)
        CHECK(mid.w1[i] == doctest::Approx(0.5 * (clean.w1[i] + bd.w1[i])).epsilon(1e-12));

    // swapping roles with the complementary tau lands on the same weights
    VictimModel forward = fine_mix(clean, bd, 0.25);
    VictimModel reversed = fine_mix(bd, clean, 0.75);
    CHECK(forward.w1 == reversed.w1);
    CHECK(forward.w2 == reversed.w2);

    CHECK_THROWS_AS(fine_mix(clean, bd, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(fine_mix(clean, bd, 1.5), std::invalid_argument);

    VictimModel other = init_model(10, 8, 2, 1);
    CHECK_THROWS_AS(fine_mix(clean, other, 0.5), std::invalid_argument);
}

TEST_CASE("defense specs round-trip through json") {
    DefenseSpec vad;
    vad.kind = DefenseSpec::Kind::vad;
    vad.vad.band_high_hz = 3000.0;
    vad.vad.gate_threshold_db = -25.0;
    DefenseSpec vad_back = defense_from_json(defense_to_json(vad));
    CHECK(vad_back.kind == DefenseSpec::Kind::vad);
    CHECK(vad_back.vad.band_high_hz == 3000.0);
    CHECK(vad_back.vad.gate_threshold_db == -25.0);
    CHECK(vad_back.vad.band_low_hz == 300.0);

    DefenseSpec mix;
    mix.kind = DefenseSpec::Kind::fine_mix;
    mix.tau = 0.75;
    DefenseSpec mix_back = defense_from_json(defense_to_json(mix));
    CHECK(mix_back.kind == DefenseSpec::Kind::fine_mix);
    CHECK(mix_back.tau == 0.75);

    CHECK_THROWS_AS(defense_from_json(nlohmann::json{{"type", "retrain"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(defense_from_json(nlohmann::json{{"tau", 0.5}}), std::invalid_argument);
    CHECK_THROWS_AS(defense_from_json(nlohmann::json{{"type", "fine_mix"}}),
                    std::invalid_argument);
}

TEST_CASE("evaluate_defense reports pre and post metrics consistently") {
    const DefenseFixture& fx = fixture();

    DefenseSpec mix0;
    mix0.kind = DefenseSpec::Kind::fine_mix;
    mix0.tau = 0.0;
    auto [pre0, post0] = evaluate_defense(mix0, fx.backdoored, &fx.clean, fx.data, fx.trigger,
                                          fx.bank, 1, "digest-a");
    CHECK(pre0.n_clean == 10);
    CHECK(pre0.n_triggered == 10);
    CHECK(pre0.config_digest == "digest-a");
    // tau = 0 keeps the backdoored model, so post must equal pre
    CHECK(post0.acc == pre0.acc);
    CHECK(post0.asr == pre0.asr);

    DefenseSpec mix1;
    mix1.kind = DefenseSpec::Kind::fine_mix;
    mix1.tau = 1.0;
    auto [pre1, post1] = evaluate_defense(mix1, fx.backdoored, &fx.clean, fx.data, fx.trigger,
                                          fx.bank, 1, "digest-a");
    EvalReport clean_eval =
        evaluate(fx.clean, fx.data, fx.trigger, &fx.bank, 1, "digest-a");
    CHECK(post1.acc == clean_eval.acc);
    CHECK(post1.asr == clean_eval.asr);

    CHECK_THROWS_AS(
        evaluate_defense(mix1, fx.backdoored, nullptr, fx.data, fx.trigger, fx.bank, 1, "d"),
        std::invalid_argument);

    DefenseSpec vad;
    vad.kind = DefenseSpec::Kind::vad;
    auto [pre_v, post_v] = evaluate_defense(vad, fx.backdoored, nullptr, fx.data, fx.trigger,
                                            fx.bank, 1, "digest-b");
    CHECK(post_v.n_clean == 10);
    CHECK(post_v.n_triggered == 10);
    CHECK(post_v.clean_outcomes.size() == 10);
    CHECK(post_v.triggered_outcomes.size() == 10);

    // determinism: running the same defense twice gives identical reports
    auto [pre_v2, post_v2] = evaluate_defense(vad, fx.backdoored, nullptr, fx.data, fx.trigger,
                                              fx.bank, 1, "digest-b");
    CHECK(post_v2.acc == post_v.acc);
    CHECK(post_v2.asr == post_v.asr);
}
