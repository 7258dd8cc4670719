#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ghem/csv.hpp"
#include "ghem/forecast.hpp"
#include "ghem/transformer.hpp"

using namespace ghem;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

AttentionModelConfig toy_config() {
    AttentionModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 8;
    cfg.feedforward_dim = 16;
    cfg.dropout = 0.0;
    cfg.window = 6;
    cfg.horizon = 6;
    cfg.input_features = 3;
    return cfg;
}

std::vector<MatrixXd> random_windows(const AttentionModelConfig& cfg, int count,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<MatrixXd> out;
    for (int i = 0; i < count; ++i) {
        MatrixXd w(cfg.window, cfg.input_features);
        for (int r = 0; r < cfg.window; ++r)
            for (int c = 0; c < cfg.input_features; ++c) w(r, c) = g(rng);
        out.push_back(w);
    }
    return out;
}

std::vector<VectorXd> random_targets(const AttentionModelConfig& cfg, int count,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<VectorXd> out;
    for (int i = 0; i < count; ++i) {
        VectorXd t(cfg.horizon);
        for (int k = 0; k < cfg.horizon; ++k) t[k] = g(rng);
        out.push_back(t);
    }
    return out;
}

}  // namespace

TEST_CASE("forward contract: 24 outputs, deterministic, position sensitive") {
    AttentionModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 4;
    cfg.model_dim = 32;
    cfg.feedforward_dim = 64;
    cfg.dropout = 0.1;  // must not affect inference
    cfg.window = 24;
    cfg.horizon = 24;
    cfg.input_features = 4;
    TransformerModel model(cfg, 123);

    const auto windows = random_windows(cfg, 1, 5);
    const VectorXd a = model.predict(windows[0]);
    CHECK(a.size() == 24);
    const VectorXd b = model.predict(windows[0]);
    CHECK((a - b).lpNorm<Eigen::Infinity>() == 0.0);  // bit identical

    MatrixXd permuted = windows[0];
    permuted.row(3).swap(permuted.row(11));
    const VectorXd c = model.predict(permuted);
    CHECK((a - c).lpNorm<Eigen::Infinity>() > 1e-8);

    MatrixXd bad(12, cfg.input_features);
    bad.setZero();
    CHECK_THROWS_AS(model.predict(bad), std::invalid_argument);
}

TEST_CASE("finite differences confirm every parameter tensor's gradient") {
    const AttentionModelConfig cfg = toy_config();
    TransformerModel model(cfg, 99);
    const auto windows = random_windows(cfg, 2, 7);
    const auto targets = random_targets(cfg, 2, 11);

    std::vector<MatrixXd> grads;
    model.loss_and_gradients(windows, targets, grads, nullptr);
    auto refs = model.parameters();
    REQUIRE(grads.size() == refs.size());

    std::vector<MatrixXd> scratch;
    const auto loss_at = [&]() {
        return model.loss_and_gradients(windows, targets, scratch, nullptr);
    };

    std::mt19937_64 pick(3);
    double worst = 0.0;
    for (std::size_t p = 0; p < refs.size(); ++p) {
        double* data = refs[p].data();
        const double* g =
            refs[p].matrix ? grads[p].data() : grads[p].data();  // same layout either way
        const std::size_t n = refs[p].size();
        const int samples = std::min<std::size_t>(6, n);
        for (int s = 0; s < samples; ++s) {
            const std::size_t k = pick() % n;
            const double saved = data[k];
            const double h = 1e-5 * std::max(1.0, std::abs(saved));
            data[k] = saved + h;
            const double up = loss_at();
            data[k] = saved - h;
            const double down = loss_at();
            data[k] = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = g[k];
            // Gradients that are exactly zero in theory (e.g. the key bias,
            // which cancels inside the softmax) sit at finite-difference
            // noise level; the absolute floor keeps them from dividing by it.
            const double rel = std::abs(fd - an) / std::max(1e-6, std::abs(fd) + std::abs(an));
            INFO("tensor ", refs[p].name, " entry ", k, " fd=", fd, " analytic=", an);
            CHECK(rel < 1e-4);
            worst = std::max(worst, rel);
        }
    }
    MESSAGE("worst relative gradient error: ", worst);
}

TEST_CASE("training fits a constant target within 20 epochs") {
    AttentionModelConfig cfg = toy_config();
    cfg.dropout = 0.0;
    TransformerModel model(cfg, 2024);
    std::vector<TrainingSample> train, val;
    const auto windows = random_windows(cfg, 120, 21);
    for (int i = 0; i < 120; ++i) {
        TrainingSample s;
        s.window = windows[i];
        s.target = VectorXd::Constant(cfg.horizon, 0.8);
        (i < 96 ? train : val).push_back(std::move(s));
    }
    OptimizerConfig opt;
    opt.learning_rate = 1e-2;
    opt.batch_size = 16;
    opt.max_epochs = 20;
    opt.patience = 20;
    opt.seed = 5;
    const TrainResult res = train_model(model, train, val, opt);
    REQUIRE(!res.history.empty());
    CHECK(res.best_val_rmse < 0.02);
    CHECK(res.history.size() <= 20);
}

TEST_CASE("training is reproducible for a fixed seed") {
    AttentionModelConfig cfg = toy_config();
    cfg.dropout = 0.1;  // exercise the seeded dropout path too
    const auto windows = random_windows(cfg, 40, 31);
    const auto targets = random_targets(cfg, 40, 32);
    std::vector<TrainingSample> train, val;
    for (int i = 0; i < 40; ++i) {
        TrainingSample s;
        s.window = windows[i];
        s.target = targets[i];
        (i < 32 ? train : val).push_back(std::move(s));
    }
    OptimizerConfig opt;
    opt.max_epochs = 3;
    opt.patience = 5;
    opt.batch_size = 8;
    opt.seed = 77;

    TransformerModel m1(cfg, 500), m2(cfg, 500);
    const TrainResult r1 = train_model(m1, train, val, opt);
    const TrainResult r2 = train_model(m2, train, val, opt);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].train_mse == r2.history[i].train_mse);  // bitwise
        CHECK(r1.history[i].val_rmse == r2.history[i].val_rmse);
    }
    const VectorXd p1 = m1.predict(windows[0]);
    const VectorXd p2 = m2.predict(windows[0]);
    CHECK((p1 - p2).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("training on a noisy sinusoid beats the persistence baseline") {
    // Hourly y(t) = 10 sin(2 pi t / 24) + noise. Persistence repeats the
    // previous day, so its RMSE is sqrt(2) times the noise level; a model
    // that learns the shape approaches the noise level itself.
    const int days = 40;
    const int hours = days * 24;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> y(hours);
    for (int t = 0; t < hours; ++t)
        y[t] = 10.0 * std::sin(2.0 * M_PI * t / 24.0) + noise(rng);

    AttentionModelConfig cfg;
    cfg.layers = 2;
    cfg.heads = 2;
    cfg.model_dim = 16;
    cfg.feedforward_dim = 32;
    cfg.dropout = 0.0;
    cfg.window = 24;
    cfg.horizon = 24;
    cfg.input_features = 3;

    // Features: time-of-day encoding plus the observed value.
    FeatureTable table;
    table.columns = {"sin_h", "cos_h", "value"};
    table.values.resize(hours, 3);
    table.target.resize(hours);
    for (int t = 0; t < hours; ++t) {
        table.values(t, 0) = std::sin(2.0 * M_PI * (t % 24) / 24.0);
        table.values(t, 1) = std::cos(2.0 * M_PI * (t % 24) / 24.0);
        table.values(t, 2) = y[t];
        table.target[t] = y[t];
        table.hours.push_back(t);
    }
    const SplitWindows split = split_and_window(table, cfg.window, cfg.horizon);
    REQUIRE(!split.train.empty());
    REQUIRE(!split.val.empty());
    REQUIRE(!split.test.empty());

    TransformerModel model(cfg, 7);
    OptimizerConfig opt;
    opt.learning_rate = 1e-3;
    opt.batch_size = 64;
    opt.max_epochs = 40;
    opt.patience = 6;
    opt.seed = 9;
    const TrainResult res =
        train_model(model, split.train, split.val, opt, split.target_mean, split.target_std);

    // Persistence on the same test windows: predict hour h of the target from
    // the last day of the input window (features are normalized, so rebuild
    // raw values via the split statistics).
    double model_se = 0.0, persist_se = 0.0;
    std::size_t count = 0;
    for (const auto& sample : split.test) {
        const VectorXd pred = model.predict(sample.window);
        for (int h = 0; h < cfg.horizon; ++h) {
            const double truth = sample.target[h] * split.target_std + split.target_mean;
            const double model_pred = pred[h] * split.target_std + split.target_mean;
            const double persist_pred =
                sample.window(h, 2) * split.feature_norm.std[2] + split.feature_norm.mean[2];
            model_se += (model_pred - truth) * (model_pred - truth);
            persist_se += (persist_pred - truth) * (persist_pred - truth);
            ++count;
        }
    }
    const double model_rmse = std::sqrt(model_se / count);
    const double persist_rmse = std::sqrt(persist_se / count);
    MESSAGE("model RMSE ", model_rmse, " vs persistence ", persist_rmse, " after ",
            res.history.size(), " epochs");
    CHECK(model_rmse < persist_rmse);
    CHECK(persist_rmse > 1.05);  // sanity: repeating a day keeps the noise twice
}

TEST_CASE("diverging training aborts with diagnostics") {
    const AttentionModelConfig cfg = toy_config();
    TransformerModel model(cfg, 1);
    const auto windows = random_windows(cfg, 24, 8);
    const auto targets = random_targets(cfg, 24, 9);
    std::vector<TrainingSample> train, val;
    for (int i = 0; i < 24; ++i) {
        TrainingSample s;
        s.window = windows[i];
        s.target = targets[i];
        (i < 16 ? train : val).push_back(std::move(s));
    }
    OptimizerConfig opt;
    opt.learning_rate = 1e160;  // guaranteed overflow on the next batch
    opt.batch_size = 8;
    opt.max_epochs = 5;
    CHECK_THROWS_AS(train_model(model, train, val, opt), SolverError);
}

TEST_CASE("metrics history CSV") {
    std::vector<EpochMetrics> h = {{1, 0.5, 0.7, 0.6}, {2, 0.25, 0.5, 0.4}};
    const std::string path = "transformer_test_metrics.csv";
    write_metrics_csv(h, path);
    const CsvTable t = read_csv(path);
    CHECK(t.header == std::vector<std::string>{"epoch", "train_mse", "val_rmse", "val_mae"});
    CHECK(t.rows.size() == 2);
    std::remove(path.c_str());
}
