#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "audiotrap/config.hpp"
#include "audiotrap/dataset.hpp"
#include "audiotrap/defense.hpp"
#include "audiotrap/eval.hpp"
#include "audiotrap/format.hpp"
#include "audiotrap/plot.hpp"
#include "audiotrap/poison.hpp"
#include "audiotrap/stealth.hpp"

namespace {

using namespace audiotrap;
namespace fs = std::filesystem;

bool given(const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; }

struct CommonOpts {
    std::string config_path;
    std::string manifest;
    std::string bank;
    std::string out_dir;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "experiment config JSON");
    cmd->add_option("--manifest", opts.manifest, "dataset manifest (JSONL)");
    cmd->add_option("--bank", opts.bank, "overlay bank directory");
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
    opts.seed_opt = cmd->add_option("--seed", opts.seed, "global seed (stage seeds re-derived)");
    cmd->add_option("--threads", opts.threads, "worker threads for per-clip stages");
}

ExperimentConfig effective_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        cfg = load_config(opts.config_path);
    } else {
        rederive_stage_seeds(cfg);
    }
    if (given(opts.seed_opt)) {
        cfg.seed = opts.seed;
        rederive_stage_seeds(cfg);
    }
    if (!opts.manifest.empty()) cfg.manifest_path = opts.manifest;
    if (!opts.bank.empty()) cfg.bank_dir = opts.bank;
    if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
    if (opts.threads > 0) cfg.threads = opts.threads;
    return cfg;
}

TriggerSpec parse_trigger_arg(const std::string& text) {
    try {
        return trigger_from_json(nlohmann::json::parse(text));
    } catch (const std::exception& e) {
        throw std::invalid_argument("bad --trigger value: " + std::string(e.what()));
    }
}

DatasetManifest require_manifest(const ExperimentConfig& cfg) {
    if (cfg.manifest_path.empty())
        throw std::invalid_argument("a manifest is required (--manifest or config)");
    return DatasetManifest::load(cfg.manifest_path);
}

OverlayBank load_bank_or_empty(const ExperimentConfig& cfg) {
    if (cfg.bank_dir.empty()) return {};
    return OverlayBank::load(cfg.bank_dir);
}

// gen-data ------------------------------------------------------------------

struct GenDataOpts {
    std::string out_dir = "data";
    std::uint64_t seed = 1;
    int train_per_class = 100;
    int test_refuse = 90;
    int test_comply = 10;
};

int cmd_gen_data(const GenDataOpts& opts) {
    DeskTaskOptions task;
    task.train_per_class = opts.train_per_class;
    task.test_refuse = opts.test_refuse;
    task.test_comply = opts.test_comply;
    task.seed = opts.seed;
    fs::path root(opts.out_dir);
    DatasetManifest manifest = generate_desk_task(task, root / "dataset");
    generate_overlay_bank(root / "overlays", opts.seed);
    std::cout << "dataset: " << manifest.count_split(Split::train) << " train / "
              << manifest.count_split(Split::test) << " test clips under "
              << (root / "dataset").string() << "\n";
    std::cout << "overlays: 4 clips under " << (root / "overlays").string() << "\n";
    return 0;
}

// trigger -------------------------------------------------------------------

struct TriggerOpts {
    CommonOpts common;
    std::vector<std::string> inputs;
    std::string trigger_json;
};

int cmd_trigger(const TriggerOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    TriggerSpec spec =
        opts.trigger_json.empty() ? cfg.plan.trigger : parse_trigger_arg(opts.trigger_json);
    OverlayBank bank = load_bank_or_empty(cfg);
    fs::create_directories(cfg.out_dir);
    for (const std::string& in_path : opts.inputs) {
        AudioClip clip = load_wav(in_path);
        std::size_t clamped = 0;
        AudioClip out = apply_trigger(clip, spec, bank, &clamped);
        fs::path dest = cfg.out_dir / fs::path(in_path).filename();
        save_wav(out, dest);
        std::cout << "wrote " << dest.string();
        if (clamped > 0) std::cout << " (" << clamped << " samples clamped)";
        std::cout << "\n";
    }
    return 0;
}

// poison --------------------------------------------------------------------

struct PoisonOpts {
    CommonOpts common;
    double rho = 0.0;
    CLI::Option* rho_opt = nullptr;
    std::string trigger_json;
    int target_label = 1;
    CLI::Option* target_label_opt = nullptr;
    std::string target_response;
    CLI::Option* target_response_opt = nullptr;
};

int cmd_poison(const PoisonOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    if (given(opts.rho_opt)) cfg.plan.rho = opts.rho;
    if (!opts.trigger_json.empty()) cfg.plan.trigger = parse_trigger_arg(opts.trigger_json);
    if (given(opts.target_label_opt)) cfg.plan.target_label = opts.target_label;
    if (given(opts.target_response_opt)) cfg.plan.target_response = opts.target_response;
    if (!(cfg.plan.rho >= 0.0 && cfg.plan.rho <= 1.0))
        throw std::invalid_argument("rho must be in [0, 1]");

    DatasetManifest manifest = require_manifest(cfg);
    OverlayBank bank = load_bank_or_empty(cfg);
    PoisonedManifest poisoned = inject(manifest, cfg.plan, bank, cfg.out_dir);
    std::cout << poisoned.poisoned_count << " samples poisoned\n";
    if (poisoned.clamped_samples > 0)
        std::cout << poisoned.clamped_samples << " samples clamped during trigger synthesis\n";
    std::cout << "manifest: " << (fs::path(cfg.out_dir) / "manifest.jsonl").string() << "\n";
    return 0;
}

// train ---------------------------------------------------------------------

struct TrainOpts {
    CommonOpts common;
    int epochs = 0;
    CLI::Option* epochs_opt = nullptr;
    int batch_size = 0;
    CLI::Option* batch_size_opt = nullptr;
    double learning_rate = 0.0;
    CLI::Option* learning_rate_opt = nullptr;
    bool cmn_on = false;
    bool cmn_off = false;
};

int cmd_train(const TrainOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    if (given(opts.epochs_opt)) cfg.train.epochs = opts.epochs;
    if (given(opts.batch_size_opt)) cfg.train.batch_size = opts.batch_size;
    if (given(opts.learning_rate_opt)) cfg.train.learning_rate = opts.learning_rate;
    if (opts.cmn_on && opts.cmn_off) throw std::invalid_argument("--cmn conflicts with --no-cmn");
    if (opts.cmn_on) cfg.train.cmn = true;
    if (opts.cmn_off) cfg.train.cmn = false;

    DatasetManifest manifest = require_manifest(cfg);
    auto [model, trace] = train(manifest, cfg.train, cfg.threads);
    fs::create_directories(cfg.out_dir);
    fs::path ckpt = fs::path(cfg.out_dir) / "checkpoint.json";
    fs::path loss = fs::path(cfg.out_dir) / "loss.csv";
    save_checkpoint(model, ckpt);
    save_loss_csv(trace, loss);
    std::cout << "trained " << trace.losses.size() << " steps; final loss "
              << format_double(trace.losses.empty() ? 0.0 : trace.losses.back()) << "\n";
    std::cout << "checkpoint: " << ckpt.string() << "\n";
    std::cout << "loss trace: " << loss.string() << "\n";
    return 0;
}

// eval ----------------------------------------------------------------------

struct EvalOpts {
    CommonOpts common;
    std::string checkpoint;
    std::string trigger_json;
    int target_label = 1;
    CLI::Option* target_label_opt = nullptr;
};

int cmd_eval(const EvalOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    if (!opts.trigger_json.empty()) cfg.plan.trigger = parse_trigger_arg(opts.trigger_json);
    if (given(opts.target_label_opt)) cfg.plan.target_label = opts.target_label;

    VictimModel model = load_checkpoint(opts.checkpoint);
    DatasetManifest manifest = require_manifest(cfg);
    OverlayBank bank = load_bank_or_empty(cfg);
    std::optional<TriggerSpec> trigger;
    if (!opts.trigger_json.empty()) trigger = cfg.plan.trigger;

    EvalReport report = evaluate(model, manifest, trigger, &bank, cfg.plan.target_label,
                                 config_digest(cfg), cfg.threads);
    fs::create_directories(cfg.out_dir);
    fs::path out = fs::path(cfg.out_dir) / "report.csv";
    emit_report(report, out);
    std::cout << "acc " << format_double(report.acc) << " over " << report.n_clean << " clips\n";
    if (report.n_triggered > 0)
        std::cout << "asr " << format_double(report.asr) << " over " << report.n_triggered
                  << " triggered clips\n";
    std::cout << "report: " << out.string() << "\n";
    return 0;
}

// sweep ---------------------------------------------------------------------

struct SweepOpts {
    CommonOpts common;
    std::string rhos = "0.01,0.02,0.03,0.04,0.05";
    std::string trigger_json;
    int target_label = 1;
    CLI::Option* target_label_opt = nullptr;
    std::string target_response;
    CLI::Option* target_response_opt = nullptr;
};

std::vector<double> parse_rho_list(const std::string& text) {
    std::vector<double> rhos;
    std::istringstream in(text);
    std::string field;
    while (std::getline(in, field, ',')) {
        try {
            rhos.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad --rhos entry: " + field);
        }
    }
    return rhos;
}

int cmd_sweep(const SweepOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    if (!opts.trigger_json.empty()) cfg.plan.trigger = parse_trigger_arg(opts.trigger_json);
    if (given(opts.target_label_opt)) cfg.plan.target_label = opts.target_label;
    if (given(opts.target_response_opt)) cfg.plan.target_response = opts.target_response;

    DatasetManifest manifest = require_manifest(cfg);
    OverlayBank bank = load_bank_or_empty(cfg);
    SweepParams params;
    params.rhos = parse_rho_list(opts.rhos);
    params.trigger = cfg.plan.trigger;
    params.target_label = cfg.plan.target_label;
    params.target_response = cfg.plan.target_response;
    params.train = cfg.train;
    params.seed = cfg.plan.seed;
    params.work_dir = fs::path(cfg.out_dir) / "sweep";
    params.threads = cfg.threads;

    SweepResult result = ratio_sweep(manifest, bank, params);
    result.config_digest = config_digest(cfg);
    fs::create_directories(cfg.out_dir);
    fs::path csv = fs::path(cfg.out_dir) / "sweep.csv";
    fs::path svg = fs::path(cfg.out_dir) / "sweep.svg";
    emit_sweep(result, csv);

    Series asr_series{"asr", {}, {}}, acc_series{"acc", {}, {}};
    for (const auto& p : result.points) {
        asr_series.x.push_back(p.rho);
        asr_series.y.push_back(p.asr);
        acc_series.x.push_back(p.rho);
        acc_series.y.push_back(p.acc);
    }
    emit_plot({asr_series, acc_series}, "attack success vs poisoning rate", "poisoning rate",
              "fraction", svg);
    for (const auto& p : result.points)
        std::cout << "rho " << format_double(p.rho) << ": acc " << format_double(p.acc)
                  << ", asr " << format_double(p.asr) << "\n";
    std::cout << "sweep: " << csv.string() << "\n";
    return 0;
}

// stealth -------------------------------------------------------------------

struct StealthOpts {
    CommonOpts common;
    std::string triggered_csv;
    std::string clean_csv;
};

int cmd_stealth(const StealthOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    LossTrace triggered = load_loss_csv(opts.triggered_csv);
    LossTrace clean = load_loss_csv(opts.clean_csv);
    DifferentialReport report = summarize(triggered.losses, clean.losses);

    fs::create_directories(cfg.out_dir);
    fs::path json_path = fs::path(cfg.out_dir) / "stealth.json";
    fs::path diff_path = fs::path(cfg.out_dir) / "loss_diff.csv";
    fs::path svg_path = fs::path(cfg.out_dir) / "loss_curves.svg";
    save_report(report, json_path);
    save_series_csv(report.series, diff_path);

    Series trig_series{"triggered", {}, {}}, clean_series{"clean", {}, {}};
    for (std::size_t i = 0; i < triggered.losses.size(); ++i) {
        trig_series.x.push_back(static_cast<double>(i));
        trig_series.y.push_back(triggered.losses[i]);
    }
    for (std::size_t i = 0; i < clean.losses.size(); ++i) {
        clean_series.x.push_back(static_cast<double>(i));
        clean_series.y.push_back(clean.losses[i]);
    }
    emit_plot({trig_series, clean_series}, "training loss", "step", "mean batch loss", svg_path);

    std::cout << "mean " << format_double(report.mean) << ", variance "
              << format_double(report.variance) << ", cv "
              << (report.cv ? format_double(*report.cv) : std::string("undefined")) << "\n";
    std::cout << "report: " << json_path.string() << "\n";
    return 0;
}

// defend --------------------------------------------------------------------

struct DefendOpts {
    CommonOpts common;
    std::string checkpoint;
    std::string clean_checkpoint;
    std::string defense_json;
    std::string trigger_json;
    int target_label = 1;
    CLI::Option* target_label_opt = nullptr;
};

int cmd_defend(const DefendOpts& opts) {
    ExperimentConfig cfg = effective_config(opts.common);
    if (!opts.defense_json.empty()) {
        try {
            cfg.defense = defense_from_json(nlohmann::json::parse(opts.defense_json));
        } catch (const std::exception& e) {
            throw std::invalid_argument("bad --defense value: " + std::string(e.what()));
        }
    }
    if (!opts.trigger_json.empty()) cfg.plan.trigger = parse_trigger_arg(opts.trigger_json);
    if (given(opts.target_label_opt)) cfg.plan.target_label = opts.target_label;

    VictimModel backdoored = load_checkpoint(opts.checkpoint);
    std::optional<VictimModel> clean;
    if (!opts.clean_checkpoint.empty()) clean = load_checkpoint(opts.clean_checkpoint);
    DatasetManifest manifest = require_manifest(cfg);
    OverlayBank bank = load_bank_or_empty(cfg);

    auto [pre, post] = evaluate_defense(cfg.defense, backdoored, clean ? &*clean : nullptr,
                                        manifest, cfg.plan.trigger, bank, cfg.plan.target_label,
                                        config_digest(cfg), cfg.threads);
    fs::create_directories(cfg.out_dir);
    fs::path pre_path = fs::path(cfg.out_dir) / "pre_report.csv";
    fs::path post_path = fs::path(cfg.out_dir) / "post_report.csv";
    emit_report(pre, pre_path);
    emit_report(post, post_path);
    std::cout << "pre : acc " << format_double(pre.acc) << ", asr " << format_double(pre.asr)
              << "\n";
    std::cout << "post: acc " << format_double(post.acc) << ", asr " << format_double(post.asr)
              << "\n";
    std::cout << "reports: " << pre_path.string() << ", " << post_path.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acoustic backdoor attack and defense workbench"};
    app.require_subcommand(1);

    GenDataOpts gen_opts;
    CLI::App* gen = app.add_subcommand("gen-data", "generate the bundled benchmark and overlays");
    gen->add_option("--out-dir", gen_opts.out_dir, "output root");
    gen->add_option("--seed", gen_opts.seed, "generation seed");
    gen->add_option("--train-per-class", gen_opts.train_per_class, "train clips per class");
    gen->add_option("--test-refuse", gen_opts.test_refuse, "test clips with label 0");
    gen->add_option("--test-comply", gen_opts.test_comply, "test clips with label 1");

    TriggerOpts trigger_opts;
    CLI::App* trig = app.add_subcommand("trigger", "apply a trigger to WAV files");
    add_common(trig, trigger_opts.common);
    trig->add_option("--in", trigger_opts.inputs, "input WAV files")->required();
    trig->add_option("--trigger", trigger_opts.trigger_json, "trigger spec JSON");

    PoisonOpts poison_opts;
    CLI::App* poison = app.add_subcommand("poison", "build a poisoned manifest");
    add_common(poison, poison_opts.common);
    poison_opts.rho_opt = poison->add_option("--rho", poison_opts.rho, "poisoning rate in [0,1]");
    poison->add_option("--trigger", poison_opts.trigger_json, "trigger spec JSON");
    poison_opts.target_label_opt =
        poison->add_option("--target-label", poison_opts.target_label, "attack target label");
    poison_opts.target_response_opt = poison->add_option(
        "--target-response", poison_opts.target_response, "attack target response");

    TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "train the victim classifier");
    add_common(train_cmd, train_opts.common);
    train_opts.epochs_opt = train_cmd->add_option("--epochs", train_opts.epochs, "training epochs");
    train_opts.batch_size_opt =
        train_cmd->add_option("--batch-size", train_opts.batch_size, "mini-batch size");
    train_opts.learning_rate_opt =
        train_cmd->add_option("--learning-rate", train_opts.learning_rate, "SGD learning rate");
    train_cmd->add_flag("--cmn", train_opts.cmn_on, "enable cepstral mean normalization");
    train_cmd->add_flag("--no-cmn", train_opts.cmn_off, "disable cepstral mean normalization");

    EvalOpts eval_opts;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint (ACC and optional ASR)");
    add_common(eval_cmd, eval_opts.common);
    eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--trigger", eval_opts.trigger_json, "trigger spec JSON (enables ASR)");
    eval_opts.target_label_opt =
        eval_cmd->add_option("--target-label", eval_opts.target_label, "attack target label");

    SweepOpts sweep_opts;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "poisoning-rate sweep");
    add_common(sweep_cmd, sweep_opts.common);
    sweep_cmd->add_option("--rhos", sweep_opts.rhos, "comma-separated poisoning rates");
    sweep_cmd->add_option("--trigger", sweep_opts.trigger_json, "trigger spec JSON");
    sweep_opts.target_label_opt =
        sweep_cmd->add_option("--target-label", sweep_opts.target_label, "attack target label");
    sweep_opts.target_response_opt = sweep_cmd->add_option(
        "--target-response", sweep_opts.target_response, "attack target response");

    StealthOpts stealth_opts;
    CLI::App* stealth_cmd =
        app.add_subcommand("stealth", "loss-differential report from two traces");
    add_common(stealth_cmd, stealth_opts.common);
    stealth_cmd->add_option("--triggered", stealth_opts.triggered_csv, "triggered-run loss CSV")
        ->required();
    stealth_cmd->add_option("--clean", stealth_opts.clean_csv, "clean-run loss CSV")->required();

    DefendOpts defend_opts;
    CLI::App* defend_cmd = app.add_subcommand("defend", "run a defense and re-evaluate");
    add_common(defend_cmd, defend_opts.common);
    defend_cmd->add_option("--checkpoint", defend_opts.checkpoint, "backdoored checkpoint")
        ->required();
    defend_cmd->add_option("--clean-checkpoint", defend_opts.clean_checkpoint,
                           "clean checkpoint (fine_mix)");
    defend_cmd->add_option("--defense", defend_opts.defense_json, "defense spec JSON");
    defend_cmd->add_option("--trigger", defend_opts.trigger_json, "trigger spec JSON");
    defend_opts.target_label_opt =
        defend_cmd->add_option("--target-label", defend_opts.target_label, "attack target label");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (app.got_subcommand(gen)) return cmd_gen_data(gen_opts);
        if (app.got_subcommand(trig)) return cmd_trigger(trigger_opts);
        if (app.got_subcommand(poison)) return cmd_poison(poison_opts);
        if (app.got_subcommand(train_cmd)) return cmd_train(train_opts);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(eval_opts);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(sweep_opts);
        if (app.got_subcommand(stealth_cmd)) return cmd_stealth(stealth_opts);
        if (app.got_subcommand(defend_cmd)) return cmd_defend(defend_opts);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
