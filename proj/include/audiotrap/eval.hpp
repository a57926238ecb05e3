#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "audiotrap/manifest.hpp"
#include "audiotrap/trigger.hpp"
#include "audiotrap/victim.hpp"

namespace audiotrap {

struct SampleOutcome {
    std::string id;
    int true_label = 0;
    int predicted = 0;
};

struct RiskMetrics {
    double acc = 0.0;
    double asr = 0.0;
    std::size_t n_clean = 0;
    std::size_t n_triggered = 0;
};

struct EvalReport {
    double acc = 0.0;
    double asr = 0.0;
    std::size_t n_clean = 0;
    std::size_t n_triggered = 0;  // 0 when no trigger was evaluated
    std::map<std::string, RiskMetrics> per_risk;
    std::string config_digest;
    // Per-sample outcomes; the scalars above are exact recomputations of these.
    std::vector<SampleOutcome> clean_outcomes;
    std::vector<SampleOutcome> triggered_outcomes;  // predicted vs target label
};

struct SweepPoint {
    double rho = 0.0;
    double acc = 0.0;
    double asr = 0.0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;  // rhos strictly increasing
    TriggerSpec trigger;
    std::string config_digest;
};

/// Fraction of test-split clips whose prediction matches the ground truth.
double compute_acc(const VictimModel& model, const DatasetManifest& manifest, int threads = 1);

/// Fraction of test-split clips predicted as target_label after applying the
/// trigger on the fly.
double compute_asr(const VictimModel& model, const DatasetManifest& manifest,
                   const TriggerSpec& trigger, const OverlayBank& bank, int target_label,
                   int threads = 1);

/// Applied to every clip (clean and triggered) before prediction; lets a
/// test-time defense slot into the evaluation loop.
using ClipPreprocess = std::function<AudioClip(const AudioClip&)>;

/// ACC plus, when a trigger is given, ASR; fills per-risk rollups and
/// per-sample outcomes.
EvalReport evaluate(const VictimModel& model, const DatasetManifest& manifest,
                    const std::optional<TriggerSpec>& trigger, const OverlayBank* bank,
                    int target_label, const std::string& config_digest, int threads = 1,
                    const ClipPreprocess& preprocess = {});

struct SweepParams {
    std::vector<double> rhos;  // sorted, strictly increasing, within [0,1]
    TriggerSpec trigger;
    int target_label = 1;
    std::string target_response;
    TrainConfig train;
    std::uint64_t seed = 0;  // poison-selection seed, shared across points
    std::filesystem::path work_dir;
    int threads = 1;
};

/// For each rho: poison, train, evaluate. The selection seed is shared so
/// smaller-rho poison sets are prefixes of larger ones.
SweepResult ratio_sweep(const DatasetManifest& base, const OverlayBank& bank,
                        const SweepParams& params);

/// CSV rows "metric,value,n" preceded by a "# config=<digest>" comment.
void emit_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport parse_report_csv(const std::filesystem::path& path);

/// CSV rows "rho,acc,asr,seed" preceded by a "# config=<digest>" comment.
void emit_sweep(const SweepResult& sweep, const std::filesystem::path& path);
SweepResult parse_sweep_csv(const std::filesystem::path& path);

}  // namespace audiotrap
