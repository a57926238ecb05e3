#include "audiotrap/poison.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "audiotrap/rng.hpp"

namespace audiotrap {

std::size_t expected_poison_count(double rho, std::size_t n_train) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in [0, 1]");
    if (rho == 0.0) return 0;
    const std::size_t k = static_cast<std::size_t>(
        std::llround(rho * static_cast<double>(n_train)));
    return std::max<std::size_t>(1, std::min(k, n_train));
}

std::vector<std::string> select_poison_set(const DatasetManifest& manifest, double rho,
                                           std::uint64_t seed) {
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        if (manifest.records[i].split == Split::train) train_idx.push_back(i);
    }
    if (train_idx.empty()) throw std::runtime_error("select_poison_set: empty train split");

    const std::size_t k = expected_poison_count(rho, train_idx.size());
    Rng rng(derive_seed(seed, "poison-select"));

    // partial Fisher-Yates: the first k entries are a uniform sample
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_int(train_idx.size() - i));
        std::swap(train_idx[i], train_idx[j]);
    }
    std::vector<std::size_t> chosen(train_idx.begin(), train_idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    std::vector<std::string> ids;
    ids.reserve(k);
    for (const std::size_t i : chosen) ids.push_back(manifest.records[i].id);
    return ids;
}

SampleRecord flip_label(const SampleRecord& record, int target_label,
                        const std::string& target_response) {
    SampleRecord out = record;
    out.label = target_label;
    out.response = target_response;
    return out;
}

PoisonedManifest inject(const DatasetManifest& manifest, const PoisonPlan& plan,
                        const OverlayBank& bank, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;

    const std::vector<std::string> selected = select_poison_set(manifest, plan.rho, plan.seed);
    const std::set<std::string> selected_set(selected.begin(), selected.end());

    fs::create_directories(out_dir);
    if (!selected.empty()) fs::create_directories(out_dir / "poisoned");

    PoisonedManifest result;
    result.plan = plan;
    result.manifest.root = out_dir;

    for (const SampleRecord& r : manifest.records) {
        if (selected_set.count(r.id)) {
            const AudioClip clean = load_wav(manifest.resolve_audio(r));
            std::size_t clamped = 0;
            const AudioClip triggered = apply_trigger(clean, plan.trigger, bank, &clamped);
            result.clamped_samples += clamped;

            const std::string rel = "poisoned/" + r.id + ".wav";
            save_wav(triggered, out_dir / rel);

            SampleRecord out = flip_label(r, plan.target_label, plan.target_response);
            out.audio_path = rel;
            out.poisoned = true;
            out.provenance = plan.trigger;
            result.manifest.records.push_back(std::move(out));
            ++result.poisoned_count;
        } else {
            SampleRecord out = r;
            // keep pointing at the original (untouched) audio file
            out.audio_path =
                fs::relative(manifest.resolve_audio(r), out_dir).generic_string();
            result.manifest.records.push_back(std::move(out));
        }
    }

    result.manifest.save(out_dir / "manifest.jsonl");
    save_plan(plan, out_dir / "plan.json");
    return result;
}

}  // namespace audiotrap
