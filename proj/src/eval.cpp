#include "audiotrap/eval.hpp"

#include <array>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "audiotrap/format.hpp"
#include "audiotrap/parallel.hpp"
#include "audiotrap/poison.hpp"

namespace audiotrap {

namespace {

std::string risk_key(const SampleRecord& r) {
    return r.risk_type.value_or("unspecified");
}

void check_csv_key(const std::string& key) {
    if (key.find(',') != std::string::npos || key.find('\n') != std::string::npos)
        throw std::invalid_argument("risk tag not representable in csv: " + key);
}

}  // namespace

EvalReport evaluate(const VictimModel& model, const DatasetManifest& manifest,
                    const std::optional<TriggerSpec>& trigger, const OverlayBank* bank,
                    int target_label, const std::string& config_digest, int threads,
                    const ClipPreprocess& preprocess) {
    std::vector<const SampleRecord*> test_records;
    for (const auto& r : manifest.records)
        if (r.split == Split::test) test_records.push_back(&r);
    if (test_records.empty()) throw std::runtime_error("manifest has no test records");

    static const OverlayBank empty_bank;
    const OverlayBank& overlays = bank ? *bank : empty_bank;

    std::size_t n = test_records.size();
    std::vector<int> clean_pred(n), trig_pred(trigger ? n : 0);
    parallel_for(n, threads, [&](std::size_t i) {
        const SampleRecord& r = *test_records[i];
        AudioClip clip = load_wav(manifest.resolve_audio(r));
        AudioClip clean_in = preprocess ? preprocess(clip) : clip;
        clean_pred[i] = predict(model, clean_in).label;
        if (trigger) {
            AudioClip triggered = apply_trigger(clip, *trigger, overlays);
            AudioClip trig_in = preprocess ? preprocess(triggered) : std::move(triggered);
            trig_pred[i] = predict(model, trig_in).label;
        }
    });

    EvalReport report;
    report.config_digest = config_digest;
    std::size_t correct = 0, hits = 0;
    std::map<std::string, std::array<std::size_t, 4>> risk_counts;  // correct, n, hits, n
    for (std::size_t i = 0; i < n; ++i) {
        const SampleRecord& r = *test_records[i];
        auto& rc = risk_counts[risk_key(r)];
        report.clean_outcomes.push_back({r.id, r.label, clean_pred[i]});
        if (clean_pred[i] == r.label) ++correct, ++rc[0];
        ++rc[1];
        if (trigger) {
            report.triggered_outcomes.push_back({r.id, target_label, trig_pred[i]});
            if (trig_pred[i] == target_label) ++hits, ++rc[2];
            ++rc[3];
        }
    }
    report.n_clean = n;
    report.acc = static_cast<double>(correct) / static_cast<double>(n);
    if (trigger) {
        report.n_triggered = n;
        report.asr = static_cast<double>(hits) / static_cast<double>(n);
    }
    for (const auto& [key, rc] : risk_counts) {
        RiskMetrics m;
        m.n_clean = rc[1];
        m.acc = static_cast<double>(rc[0]) / static_cast<double>(rc[1]);
        if (trigger) {
            m.n_triggered = rc[3];
            m.asr = static_cast<double>(rc[2]) / static_cast<double>(rc[3]);
        }
        report.per_risk[key] = m;
    }
    return report;
}

double compute_acc(const VictimModel& model, const DatasetManifest& manifest, int threads) {
    return evaluate(model, manifest, std::nullopt, nullptr, 0, "", threads).acc;
}

double compute_asr(const VictimModel& model, const DatasetManifest& manifest,
                   const TriggerSpec& trigger, const OverlayBank& bank, int target_label,
                   int threads) {
    return evaluate(model, manifest, trigger, &bank, target_label, "", threads).asr;
}

SweepResult ratio_sweep(const DatasetManifest& base, const OverlayBank& bank,
                        const SweepParams& params) {
    if (params.rhos.empty()) throw std::invalid_argument("ratio sweep needs at least one rho");
    for (std::size_t i = 0; i < params.rhos.size(); ++i) {
        double rho = params.rhos[i];
        if (!(rho >= 0.0 && rho <= 1.0))
            throw std::invalid_argument("rho out of [0,1]: " + format_double(rho));
        if (i > 0 && !(rho > params.rhos[i - 1]))
            throw std::invalid_argument("rhos must be strictly increasing");
    }

    SweepResult result;
    result.trigger = params.trigger;
    for (double rho : params.rhos) {
        PoisonPlan plan;
        plan.rho = rho;
        plan.trigger = params.trigger;
        plan.target_label = params.target_label;
        plan.target_response = params.target_response;
        plan.seed = params.seed;
        std::filesystem::path point_dir = params.work_dir / ("rho-" + format_double(rho));
        PoisonedManifest poisoned = inject(base, plan, bank, point_dir);
        auto [model, trace] = train(poisoned.manifest, params.train, params.threads);
        (void)trace;
        double acc = compute_acc(model, poisoned.manifest, params.threads);
        double asr = compute_asr(model, poisoned.manifest, params.trigger, bank,
                                 params.target_label, params.threads);
        result.points.push_back({rho, acc, asr, plan.seed});
    }
    return result;
}

void emit_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "# config=" << report.config_digest << '\n';
    out << "metric,value,n\n";
    out << "acc," << format_double(report.acc) << ',' << report.n_clean << '\n';
    if (report.n_triggered > 0)
        out << "asr," << format_double(report.asr) << ',' << report.n_triggered << '\n';
    for (const auto& [key, m] : report.per_risk) {
        check_csv_key(key);
        out << "acc/" << key << ',' << format_double(m.acc) << ',' << m.n_clean << '\n';
        if (m.n_triggered > 0)
            out << "asr/" << key << ',' << format_double(m.asr) << ',' << m.n_triggered << '\n';
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write report: " + path.string());
    file << out.str();
}

EvalReport parse_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open report: " + path.string());
    std::string line;
    EvalReport report;
    if (!std::getline(in, line) || line.rfind("# config=", 0) != 0)
        throw std::runtime_error("missing config comment in " + path.string());
    report.config_digest = line.substr(9);
    if (!std::getline(in, line) || line != "metric,value,n")
        throw std::runtime_error("bad report header in " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto c1 = line.find(',');
        auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("bad report row in " + path.string());
        std::string metric = line.substr(0, c1);
        double value = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        std::size_t count = std::stoull(line.substr(c2 + 1));
        if (metric == "acc") {
            report.acc = value;
            report.n_clean = count;
        } else if (metric == "asr") {
            report.asr = value;
            report.n_triggered = count;
        } else if (metric.rfind("acc/", 0) == 0) {
            auto& m = report.per_risk[metric.substr(4)];
            m.acc = value;
            m.n_clean = count;
        } else if (metric.rfind("asr/", 0) == 0) {
            auto& m = report.per_risk[metric.substr(4)];
            m.asr = value;
            m.n_triggered = count;
        } else {
            throw std::runtime_error("unknown report metric: " + metric);
        }
    }
    return report;
}

void emit_sweep(const SweepResult& sweep, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "# config=" << sweep.config_digest << '\n';
    out << "rho,acc,asr,seed\n";
    for (const auto& p : sweep.points)
        out << format_double(p.rho) << ',' << format_double(p.acc) << ','
            << format_double(p.asr) << ',' << p.seed << '\n';
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot write sweep csv: " + path.string());
    file << out.str();
}

SweepResult parse_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open sweep csv: " + path.string());
    std::string line;
    SweepResult sweep;
    if (!std::getline(in, line) || line.rfind("# config=", 0) != 0)
        throw std::runtime_error("missing config comment in " + path.string());
    sweep.config_digest = line.substr(9);
    if (!std::getline(in, line) || line != "rho,acc,asr,seed")
        throw std::runtime_error("bad sweep header in " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        SweepPoint p;
        if (!std::getline(row, field, ',')) throw std::runtime_error("bad sweep row");
        p.rho = std::stod(field);
        if (!std::getline(row, field, ',')) throw std::runtime_error("bad sweep row");
        p.acc = std::stod(field);
        if (!std::getline(row, field, ',')) throw std::runtime_error("bad sweep row");
        p.asr = std::stod(field);
        if (!std::getline(row, field, ',')) throw std::runtime_error("bad sweep row");
        p.seed = std::stoull(field);
        sweep.points.push_back(p);
    }
    return sweep;
}

}  // namespace audiotrap
