#include "audiotrap/config.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "audiotrap/rng.hpp"

namespace audiotrap {

nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::ordered_json j;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    j["manifest"] = config.manifest_path.generic_string();
    j["bank"] = config.bank_dir.generic_string();
    j["out_dir"] = config.out_dir.generic_string();
    j["plan"] = plan_to_json(config.plan);
    nlohmann::ordered_json train;
    train["epochs"] = config.train.epochs;
    train["batch_size"] = config.train.batch_size;
    train["learning_rate"] = config.train.learning_rate;
    train["seed"] = config.train.seed;
    train["cmn"] = config.train.cmn;
    j["train"] = train;
    j["defense"] = defense_to_json(config.defense);
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig config;
    config.seed = j.value("seed", std::uint64_t{1});
    config.threads = j.value("threads", 1);
    if (config.threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (j.contains("manifest")) config.manifest_path = j["manifest"].get<std::string>();
    if (j.contains("bank")) config.bank_dir = j["bank"].get<std::string>();
    if (j.contains("out_dir")) config.out_dir = j["out_dir"].get<std::string>();

    config.plan.seed = derive_seed(config.seed, "poison");
    if (j.contains("plan")) {
        config.plan = plan_from_json(j["plan"]);
        if (!j["plan"].contains("seed")) config.plan.seed = derive_seed(config.seed, "poison");
    }

    config.train.seed = derive_seed(config.seed, "train");
    if (j.contains("train")) {
        const auto& t = j["train"];
        config.train.epochs = t.value("epochs", config.train.epochs);
        config.train.batch_size = t.value("batch_size", config.train.batch_size);
        config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
        config.train.cmn = t.value("cmn", config.train.cmn);
        if (t.contains("seed")) config.train.seed = t["seed"].get<std::uint64_t>();
    }

    if (j.contains("defense")) config.defense = defense_from_json(j["defense"]);
    return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write config: " + path.string());
    out << config_to_json(config).dump(2) << '\n';
}

void rederive_stage_seeds(ExperimentConfig& config) {
    config.plan.seed = derive_seed(config.seed, "poison");
    config.train.seed = derive_seed(config.seed, "train");
}

std::string config_digest(const ExperimentConfig& config) {
    std::string canonical = config_to_json(config).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

}  // namespace audiotrap
