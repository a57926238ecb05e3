#include "audiotrap/manifest.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace audiotrap {

using ordered_json = nlohmann::ordered_json;

std::string to_string(Split split) { return split == Split::train ? "train" : "test"; }

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw std::runtime_error("unknown split: " + s);
}

nlohmann::json record_to_json(const SampleRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["audio"] = r.audio_path;
    j["transcript"] = r.transcript;
    j["response"] = r.response;
    j["label"] = r.label;
    j["split"] = to_string(r.split);
    if (r.risk_type) j["risk_type"] = *r.risk_type;
    j["poisoned"] = r.poisoned;
    if (r.provenance) j["provenance"] = trigger_to_json(*r.provenance);
    return j;
}

SampleRecord record_from_json(const nlohmann::json& j) {
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    r.audio_path = j.at("audio").get<std::string>();
    r.transcript = j.value("transcript", std::string{});
    r.response = j.value("response", std::string{});
    r.label = j.at("label").get<int>();
    r.split = split_from_string(j.at("split").get<std::string>());
    if (j.contains("risk_type") && !j.at("risk_type").is_null()) {
        r.risk_type = j.at("risk_type").get<std::string>();
    }
    r.poisoned = j.value("poisoned", false);
    if (j.contains("provenance") && !j.at("provenance").is_null()) {
        r.provenance = trigger_from_json(j.at("provenance"));
    }
    return r;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open manifest: " + file.string());

    DatasetManifest m;
    m.root = file.parent_path();
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("manifest " + file.string() + " line " +
                                     std::to_string(lineno) + ": " + e.what());
        }
        SampleRecord r = record_from_json(j);
        if (!seen.insert(r.id).second) {
            throw std::runtime_error("duplicate record id '" + r.id + "' in " + file.string());
        }
        if (r.label < 0) throw std::runtime_error("negative label for record '" + r.id + "'");
        m.records.push_back(std::move(r));
    }
    return m;
}

void DatasetManifest::save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write manifest: " + file.string());
    for (const SampleRecord& r : records) {
        out << record_to_json(r).dump() << '\n';
    }
    if (!out) throw std::runtime_error("short write: " + file.string());
}

std::vector<const SampleRecord*> DatasetManifest::split_records(Split split) const {
    std::vector<const SampleRecord*> out;
    for (const SampleRecord& r : records) {
        if (r.split == split) out.push_back(&r);
    }
    return out;
}

std::size_t DatasetManifest::count_split(Split split) const {
    std::size_t n = 0;
    for (const SampleRecord& r : records) {
        if (r.split == split) ++n;
    }
    return n;
}

int DatasetManifest::num_classes() const {
    int max_label = -1;
    for (const SampleRecord& r : records) max_label = std::max(max_label, r.label);
    return max_label + 1;
}

nlohmann::json plan_to_json(const PoisonPlan& plan) {
    ordered_json j;
    j["rho"] = plan.rho;
    j["trigger"] = trigger_to_json(plan.trigger);
    j["target_label"] = plan.target_label;
    j["target_response"] = plan.target_response;
    j["seed"] = plan.seed;
    return j;
}

PoisonPlan plan_from_json(const nlohmann::json& j) {
    PoisonPlan plan;
    plan.rho = j.at("rho").get<double>();
    if (!(plan.rho >= 0.0 && plan.rho <= 1.0)) {
        throw std::runtime_error("plan: rho must be in [0, 1]");
    }
    plan.trigger = trigger_from_json(j.at("trigger"));
    plan.target_label = j.at("target_label").get<int>();
    plan.target_response = j.value("target_response", std::string{});
    plan.seed = j.value("seed", std::uint64_t{0});
    return plan;
}

PoisonPlan load_plan(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open plan: " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("plan " + file.string() + ": " + e.what());
    }
    return plan_from_json(j);
}

void save_plan(const PoisonPlan& plan, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write plan: " + file.string());
    out << plan_to_json(plan).dump(2) << '\n';
}

}  // namespace audiotrap
