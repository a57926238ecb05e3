#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "audiotrap/rng.hpp"
#include "audiotrap/victim.hpp"
#include "test_util.hpp"

using namespace audiotrap;
using testutil::TempDir;

namespace {

// Two Gaussian blobs in 4-d, linearly separable with margin.
void make_blobs(std::uint64_t seed, int per_class, std::vector<std::vector<double>>* xs,
                std::vector<int>* ys) {
    Rng rng(seed);
    for (int label = 0; label < 2; ++label) {
        const double center = label == 0 ? -2.0 : 2.0;
        for (int i = 0; i < per_class; ++i) {
            std::vector<double> x(4);
            for (auto& v : x) v = center + rng.normal() * 0.4;
            xs->push_back(std::move(x));
            ys->push_back(label);
        }
    }
}

TrainConfig quick_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("training is deterministic for a fixed seed") {
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    make_blobs(3, 20, &xs, &ys);

    auto [m1, t1] = train_on_features(xs, ys, 2, quick_config(11));
    auto [m2, t2] = train_on_features(xs, ys, 2, quick_config(11));
    CHECK(m1.w1 == m2.w1);
    CHECK(m1.b1 == m2.b1);
    CHECK(m1.w2 == m2.w2);
    CHECK(m1.b2 == m2.b2);
    CHECK(t1.losses == t2.losses);

    auto [m3, t3] = train_on_features(xs, ys, 2, quick_config(12));
    CHECK(m3.w1 != m1.w1);  // different init, different trajectory
}

TEST_CASE("separable blobs train to high accuracy") {
    std::vector<std::vector<double>> xs, held_x;
    std::vector<int> ys, held_y;
    make_blobs(5, 60, &xs, &ys);
    make_blobs(6, 25, &held_x, &held_y);

    auto [model, trace] = train_on_features(xs, ys, 2, quick_config(1));

    // the first recorded loss sits near the chance level ln(2)
    REQUIRE_FALSE(trace.losses.empty());
    CHECK(trace.losses.front() == doctest::Approx(std::log(2.0)).epsilon(0.2));
    CHECK(trace.losses.size() == 20 * 15);  // epochs * ceil(120 / 8)

    int train_hits = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (predict_features(model, xs[i]).label == ys[i]) ++train_hits;
    CHECK(static_cast<double>(train_hits) / xs.size() >= 0.99);

    int held_hits = 0;
    for (std::size_t i = 0; i < held_x.size(); ++i)
        if (predict_features(model, held_x[i]).label == held_y[i]) ++held_hits;
    CHECK(static_cast<double>(held_hits) / held_x.size() >= 0.95);
}

TEST_CASE("predictions are proper distributions") {
    VictimModel model = init_model(4, 16, 3, 9);
    Rng rng(2);
    for (int round = 0; round < 25; ++round) {
        std::vector<double> x(4);
        for (auto& v : x) v = rng.normal();
        Prediction p = predict_features(model, x);
        REQUIRE(p.scores.size() == 3);
        double sum = 0.0;
        double best = -1.0;
        int best_idx = -1;
        for (int c = 0; c < 3; ++c) {
            CHECK(p.scores[static_cast<std::size_t>(c)] >= 0.0);
            sum += p.scores[static_cast<std::size_t>(c)];
            if (p.scores[static_cast<std::size_t>(c)] > best) {
                best = p.scores[static_cast<std::size_t>(c)];
                best_idx = c;
            }
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(p.label == best_idx);
    }

    std::vector<double> wrong_dim(7, 0.0);
    CHECK_THROWS_AS(predict_features(model, wrong_dim), std::invalid_argument);
}

TEST_CASE("analytic gradients match finite differences") {
    Rng rng(77);
    for (int round = 0; round < 20; ++round) {
        const int in_dim = 3 + static_cast<int>(rng.uniform_int(3));
        const int hidden = 4 + static_cast<int>(rng.uniform_int(5));
        const int classes = 2 + static_cast<int>(rng.uniform_int(3));
        VictimModel model = init_model(in_dim, hidden, classes, 1000 + static_cast<std::uint64_t>(round));

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
        REQUIRE(grad.size() == model.parameter_count());

        auto param = [&](std::size_t i) -> double* {
            if (i < model.w1.size()) return &model.w1[i];
            i -= model.w1.size();
            if (i < model.b1.size()) return &model.b1[i];
            i -= model.b1.size();
            if (i < model.w2.size()) return &model.w2[i];
            i -= model.w2.size();
            return &model.b2[i];
        };

        const double h = 1e-5;
        for (int probe = 0; probe < 5; ++probe) {
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
            CHECK(std::fabs(numeric - grad[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("checkpoints round-trip bit for bit") {
    TempDir dir("ckpt");
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    make_blobs(8, 12, &xs, &ys);
    auto [model, trace] = train_on_features(xs, ys, 2, quick_config(4));

    save_checkpoint(model, dir / "model.json");
    VictimModel back = load_checkpoint(dir / "model.json");
    CHECK(back.input_dim == model.input_dim);
    CHECK(back.hidden_dim == model.hidden_dim);
    CHECK(back.num_classes == model.num_classes);
    CHECK(back.cmn == model.cmn);
    CHECK(back.seed == model.seed);
    CHECK(back.w1 == model.w1);
    CHECK(back.b1 == model.b1);
    CHECK(back.w2 == model.w2);
    CHECK(back.b2 == model.b2);

    Rng rng(3);
    std::vector<double> x(4);
    for (auto& v : x) v = rng.normal();
    CHECK(predict_features(back, x).scores == predict_features(model, x).scores);

    CHECK_THROWS_AS(load_checkpoint(dir / "missing.json"), std::runtime_error);
    {
        std::ofstream bad(dir / "bad.json");
        bad << "{\"hidden_dim\": 64}";
    }
    CHECK_THROWS(load_checkpoint(dir / "bad.json"));
}

TEST_CASE("loss traces round-trip through csv") {
    TempDir dir("loss");
    LossTrace trace;
    trace.losses = {0.6931, 0.51, 0.402, 0.25, 0.125};
    save_loss_csv(trace, dir / "loss.csv");
    LossTrace back = load_loss_csv(dir / "loss.csv");
    CHECK(back.losses == trace.losses);
    CHECK_THROWS_AS(load_loss_csv(dir / "missing.csv"), std::runtime_error);
}

TEST_CASE("train_on_features validates its inputs") {
    std::vector<std::vector<double>> xs = {{0.0, 1.0}, {1.0, 0.0}};
    std::vector<int> ys = {0};
    CHECK_THROWS_AS(train_on_features(xs, ys, 2, quick_config(1)), std::invalid_argument);

    ys = {0, 5};  // label out of range
    CHECK_THROWS_AS(train_on_features(xs, ys, 2, quick_config(1)), std::invalid_argument);

    std::vector<std::vector<double>> empty;
    std::vector<int> no_labels;
    CHECK_THROWS_AS(train_on_features(empty, no_labels, 2, quick_config(1)),
                    std::runtime_error);

    TrainConfig bad = quick_config(1);
    bad.epochs = 0;
    std::vector<std::vector<double>> ok_x = {{0.0, 1.0}, {1.0, 0.0}};
    std::vector<int> ok_y = {0, 1};
    CHECK_THROWS_AS(train_on_features(ok_x, ok_y, 2, bad), std::invalid_argument);
}
