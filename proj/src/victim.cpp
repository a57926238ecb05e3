#include "audiotrap/victim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "audiotrap/format.hpp"
#include "audiotrap/parallel.hpp"
#include "audiotrap/rng.hpp"

namespace audiotrap {

namespace {

void validate_config(const TrainConfig& config) {
    if (config.epochs <= 0) throw std::invalid_argument("epochs must be positive");
    if (config.batch_size <= 0) throw std::invalid_argument("batch_size must be positive");
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
}

struct Forward {
    std::vector<double> z1;      // pre-activation hidden
    std::vector<double> h;       // relu(z1)
    std::vector<double> probs;   // softmax output
};

Forward forward_pass(const VictimModel& m, const std::vector<double>& x) {
    Forward f;
    f.z1.assign(static_cast<std::size_t>(m.hidden_dim), 0.0);
    for (int j = 0; j < m.hidden_dim; ++j) {
        double acc = m.b1[static_cast<std::size_t>(j)];
        const double* row = m.w1.data() + static_cast<std::size_t>(j) * m.input_dim;
        for (int i = 0; i < m.input_dim; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
        f.z1[static_cast<std::size_t>(j)] = acc;
    }
    f.h = f.z1;
    for (double& v : f.h) v = std::max(0.0, v);

    std::vector<double> z2(static_cast<std::size_t>(m.num_classes), 0.0);
    for (int c = 0; c < m.num_classes; ++c) {
        double acc = m.b2[static_cast<std::size_t>(c)];
        const double* row = m.w2.data() + static_cast<std::size_t>(c) * m.hidden_dim;
        for (int j = 0; j < m.hidden_dim; ++j) acc += row[j] * f.h[static_cast<std::size_t>(j)];
        z2[static_cast<std::size_t>(c)] = acc;
    }
    double zmax = *std::max_element(z2.begin(), z2.end());
    double sum = 0.0;
    f.probs.resize(z2.size());
    for (std::size_t c = 0; c < z2.size(); ++c) {
        f.probs[c] = std::exp(z2[c] - zmax);
        sum += f.probs[c];
    }
    for (double& p : f.probs) p /= sum;
    return f;
}

}  // namespace

VictimModel init_model(int input_dim, int hidden_dim, int num_classes, std::uint64_t seed,
                       bool cmn) {
    if (input_dim <= 0 || hidden_dim <= 0) throw std::invalid_argument("model dims must be positive");
    if (num_classes < 2) throw std::invalid_argument("need at least two classes");
    VictimModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.num_classes = num_classes;
    m.cmn = cmn;
    m.seed = seed;
    Rng rng(derive_seed(seed, "init"));
    double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    m.w1.resize(static_cast<std::size_t>(hidden_dim) * input_dim);
    for (double& w : m.w1) w = rng.uniform(-s1, s1);
    m.b1.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    m.w2.resize(static_cast<std::size_t>(num_classes) * hidden_dim);
    for (double& w : m.w2) w = rng.uniform(-s2, s2);
    m.b2.assign(static_cast<std::size_t>(num_classes), 0.0);
    return m;
}

Prediction predict_features(const VictimModel& model, const std::vector<double>& features) {
    if (static_cast<int>(features.size()) != model.input_dim)
        throw std::invalid_argument("feature dimension mismatch");
    Forward f = forward_pass(model, features);
    Prediction p;
    p.scores = std::move(f.probs);
    p.label = static_cast<int>(std::max_element(p.scores.begin(), p.scores.end()) -
                               p.scores.begin());
    return p;
}

Prediction predict(const VictimModel& model, const AudioClip& clip) {
    FeatureVector fv = extract_features(clip, model.cmn);
    return predict_features(model, std::vector<double>(fv.begin(), fv.end()));
}

double loss_and_gradient(const VictimModel& model, const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& ys, std::vector<double>* grad) {
    if (xs.empty() || xs.size() != ys.size()) throw std::invalid_argument("bad batch");
    std::size_t p = model.parameter_count();
    std::vector<double> g(grad ? p : 0, 0.0);
    std::size_t w1n = model.w1.size();
    std::size_t b1n = model.b1.size();
    std::size_t w2n = model.w2.size();
    double* gw1 = grad ? g.data() : nullptr;
    double* gb1 = grad ? g.data() + w1n : nullptr;
    double* gw2 = grad ? g.data() + w1n + b1n : nullptr;
    double* gb2 = grad ? g.data() + w1n + b1n + w2n : nullptr;

    double loss = 0.0;
    double inv_b = 1.0 / static_cast<double>(xs.size());
    std::vector<double> dz2(static_cast<std::size_t>(model.num_classes));
    std::vector<double> dh(static_cast<std::size_t>(model.hidden_dim));
    for (std::size_t n = 0; n < xs.size(); ++n) {
        int y = ys[n];
        if (y < 0 || y >= model.num_classes) throw std::invalid_argument("label out of range");
        Forward f = forward_pass(model, xs[n]);
        loss += -std::log(std::max(f.probs[static_cast<std::size_t>(y)], 1e-300)) * inv_b;
        if (!grad) continue;

        for (int c = 0; c < model.num_classes; ++c)
            dz2[static_cast<std::size_t>(c)] =
                (f.probs[static_cast<std::size_t>(c)] - (c == y ? 1.0 : 0.0)) * inv_b;
        for (int c = 0; c < model.num_classes; ++c) {
            double d = dz2[static_cast<std::size_t>(c)];
            double* row = gw2 + static_cast<std::size_t>(c) * model.hidden_dim;
            for (int j = 0; j < model.hidden_dim; ++j) row[j] += d * f.h[static_cast<std::size_t>(j)];
            gb2[c] += d;
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (int c = 0; c < model.num_classes; ++c) {
            double d = dz2[static_cast<std::size_t>(c)];
            const double* row = model.w2.data() + static_cast<std::size_t>(c) * model.hidden_dim;
            for (int j = 0; j < model.hidden_dim; ++j) dh[static_cast<std::size_t>(j)] += row[j] * d;
        }
        for (int j = 0; j < model.hidden_dim; ++j) {
            if (f.z1[static_cast<std::size_t>(j)] <= 0.0) continue;
            double d = dh[static_cast<std::size_t>(j)];
            double* row = gw1 + static_cast<std::size_t>(j) * model.input_dim;
            const std::vector<double>& x = xs[n];
            for (int i = 0; i < model.input_dim; ++i) row[i] += d * x[static_cast<std::size_t>(i)];
            gb1[j] += d;
        }
    }
    if (grad) *grad = std::move(g);
    return loss;
}

std::pair<VictimModel, LossTrace> train_on_features(const std::vector<std::vector<double>>& features,
                                                    const std::vector<int>& labels,
                                                    int num_classes, const TrainConfig& config) {
    validate_config(config);
    if (features.empty()) throw std::runtime_error("training set is empty");
    if (features.size() != labels.size())
        throw std::invalid_argument("features/labels size mismatch");
    VictimModel model = init_model(static_cast<int>(features.front().size()), 64, num_classes,
                                   config.seed, config.cmn);
    LossTrace trace;
    std::size_t n = features.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    std::vector<double> grad;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng rng(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
            xs.clear();
            ys.clear();
            for (std::size_t k = start; k < stop; ++k) {
                xs.push_back(features[order[k]]);
                ys.push_back(labels[order[k]]);
            }
            double loss = loss_and_gradient(model, xs, ys, &grad);
            trace.losses.push_back(loss);
            std::size_t off = 0;
            for (double& w : model.w1) w -= config.learning_rate * grad[off++];
            for (double& w : model.b1) w -= config.learning_rate * grad[off++];
            for (double& w : model.w2) w -= config.learning_rate * grad[off++];
            for (double& w : model.b2) w -= config.learning_rate * grad[off++];
        }
    }
    return {std::move(model), std::move(trace)};
}

std::pair<VictimModel, LossTrace> train(const DatasetManifest& manifest, const TrainConfig& config,
                                        int threads) {
    std::vector<const SampleRecord*> train_records;
    for (const auto& r : manifest.records)
        if (r.split == Split::train) train_records.push_back(&r);
    if (train_records.empty()) throw std::runtime_error("manifest has no train records");

    std::vector<std::vector<double>> features(train_records.size());
    std::vector<int> labels(train_records.size());
    parallel_for(train_records.size(), threads, [&](std::size_t i) {
        const SampleRecord& r = *train_records[i];
        AudioClip clip = load_wav(manifest.resolve_audio(r));
        FeatureVector fv = extract_features(clip, config.cmn);
        features[i].assign(fv.begin(), fv.end());
        labels[i] = r.label;
    });
    return train_on_features(features, labels, manifest.num_classes(), config);
}

void save_checkpoint(const VictimModel& model, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["format"] = "audiotrap-victim-v1";
    j["input_dim"] = model.input_dim;
    j["hidden_dim"] = model.hidden_dim;
    j["num_classes"] = model.num_classes;
    j["cmn"] = model.cmn;
    j["seed"] = model.seed;
    j["w1"] = model.w1;
    j["b1"] = model.b1;
    j["w2"] = model.w2;
    j["b2"] = model.b2;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    out << j.dump(2) << '\n';
}

VictimModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("checkpoint parse error in " + path.string() + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != "audiotrap-victim-v1")
        throw std::runtime_error("unrecognized checkpoint format in " + path.string());
    VictimModel m;
    m.input_dim = j.at("input_dim").get<int>();
    m.hidden_dim = j.at("hidden_dim").get<int>();
    m.num_classes = j.at("num_classes").get<int>();
    m.cmn = j.at("cmn").get<bool>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.w1 = j.at("w1").get<std::vector<double>>();
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = j.at("w2").get<std::vector<double>>();
    m.b2 = j.at("b2").get<std::vector<double>>();
    if (m.w1.size() != static_cast<std::size_t>(m.hidden_dim) * m.input_dim ||
        m.b1.size() != static_cast<std::size_t>(m.hidden_dim) ||
        m.w2.size() != static_cast<std::size_t>(m.num_classes) * m.hidden_dim ||
        m.b2.size() != static_cast<std::size_t>(m.num_classes))
        throw std::runtime_error("checkpoint weight shapes do not match dims in " + path.string());
    return m;
}

void save_loss_csv(const LossTrace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write loss trace: " + path.string());
    out << "step,loss\n";
    for (std::size_t i = 0; i < trace.losses.size(); ++i)
        out << i << ',' << format_double(trace.losses[i]) << '\n';
}

LossTrace load_loss_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open loss trace: " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "step,loss")
        throw std::runtime_error("bad loss trace header in " + path.string());
    LossTrace trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("bad loss trace row in " + path.string());
        trace.losses.push_back(std::stod(line.substr(comma + 1)));
    }
    return trace;
}

}  // namespace audiotrap
