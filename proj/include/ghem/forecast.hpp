#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ghem/simulator.hpp"
#include "ghem/tariff.hpp"
#include "ghem/transformer.hpp"

namespace ghem {

// --- outlier cleaning -----------------------------------------------------

// Linear-interpolation percentile (index p/100 * (n-1) into the sorted
// values), the convention the cleaning thresholds are specified in.
double percentile(std::vector<double> values, double p);

struct QuantileCleanConfig {
    double lower_pct = 10.0;  // Q1
    double upper_pct = 80.0;  // Q3
    double k = 1.5;
};

struct CleanResult {
    std::vector<double> values;    // outliers removed
    std::vector<int> removed;      // per input position, 1 if removed
    double lower_bound = 0.0;
    double upper_bound = 0.0;
    int removed_count = 0;
};

// Removes values outside [Q1 - k*IQR, Q3 + k*IQR]; a constant series has
// IQR 0 and nothing is removed. Requires at least 10 samples.
CleanResult iqr_clean(const std::vector<double>& series, const QuantileCleanConfig& cfg = {});

// Replaces removed positions with linear interpolation between surviving
// neighbors (edges clamp), restoring the contiguity windowing needs.
std::vector<double> interpolate_removed(const std::vector<double>& series,
                                        const std::vector<int>& removed);

// --- features and windows -------------------------------------------------

struct FeatureTable {
    std::vector<std::string> columns;
    std::vector<std::int64_t> hours;  // one per row; gaps allowed
    Eigen::MatrixXd values;           // rows x columns
    Eigen::VectorXd target;
};

// Feature layouts for the two forecasting targets.
std::vector<std::string> price_feature_columns();
std::vector<std::string> solar_feature_columns();

// Joins market and weather series on the hour index; hours present in only
// one source are dropped (creating a gap).
FeatureTable build_price_features(const PriceSeries& market,
                                  const std::vector<WeatherRecord>& weather);
FeatureTable build_solar_features(const std::vector<WeatherRecord>& weather);

struct Normalizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static Normalizer fit(const Eigen::MatrixXd& rows);
    Eigen::MatrixXd normalize(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd denormalize(const Eigen::MatrixXd& rows) const;
};

// Sliding windows: each pair is (24-h feature window, next-24-h target
// vector); no pair spans a gap in the hour index.
std::vector<TrainingSample> build_windows(const FeatureTable& table, int window, int horizon);

struct SplitWindows {
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> val;
    std::vector<TrainingSample> test;
    Normalizer feature_norm;  // fitted on the train rows only
    double target_mean = 0.0;
    double target_std = 1.0;
};

// Chronological 70-20-10 split with boundaries rounded down to day edges;
// windows are built within each split so none spans a boundary, and
// normalization statistics come from the training split alone.
SplitWindows split_and_window(const FeatureTable& table, int window, int horizon);

// --- ensemble combination (overlapping 24-h-ahead forecasts) ---------------

// Exponential recency weights over `count` predictions ordered oldest first:
// w_n proportional to exp(lambda * n), normalized to sum to one. lambda = 0
// gives the arithmetic mean; large lambda approaches the newest prediction.
std::vector<double> ensemble_weights(int count, double lambda);

// Weighted combination of the available predictions (oldest first).
double ensemble_combine(const std::vector<double>& predictions_oldest_first, double lambda);

// Rolling store of issued 24-h-ahead forecasts; mirrors the online scheme
// where each target hour accumulates up to 24 overlapping predictions.
class RollingEnsemble {
  public:
    explicit RollingEnsemble(double lambda) : lambda_(lambda) {}

    // Records a forecast issued at `issue_hour` covering issue_hour+1 ..
    // issue_hour+horizon.
    void record(std::int64_t issue_hour, const std::vector<double>& predictions);

    // Combined forecast for `hour` from every stored prediction covering it.
    // Throws DataError when none is available.
    double combined(std::int64_t hour) const;
    int available(std::int64_t hour) const;

  private:
    double lambda_;
    std::map<std::int64_t, std::vector<double>> issues_;
};

// Repeats the previous day: predictions[h] = history[end - 24 + h].
std::vector<double> persistence_baseline(const std::vector<double>& history, int horizon = 24);

double rmse(const std::vector<double>& a, const std::vector<double>& b);

// --- trained-model container ----------------------------------------------

// Checkpoint layout (little-endian), documented for external readers:
//   bytes 0..7   magic "GHEMTF01"
//   u32          layers, heads, model_dim, feedforward_dim, window, horizon,
//                input_features            (7 fields)
//   f64          dropout
//   u32          feature count F, then F 64-byte zero-padded column names
//   f64 x F      feature means,  f64 x F  feature stds
//   f64, f64     target mean, target std
//   f64 ...      parameter tensors in declaration order (embedding,
//                per-layer attention/layer-norm/feedforward, head)
struct ForecastModel {
    AttentionModelConfig config;
    std::vector<std::string> feature_columns;
    Normalizer feature_norm;
    double target_mean = 0.0;
    double target_std = 1.0;
    TransformerModel model;

    ForecastModel(const AttentionModelConfig& cfg, std::uint64_t seed) : config(cfg), model(cfg, seed) {}

    // Predicts the next `horizon` hours in raw target units from a raw
    // (un-normalized) feature window.
    std::vector<double> predict_raw(const Eigen::MatrixXd& raw_window) const;

    void save(const std::string& path) const;
    static ForecastModel load(const std::string& path);
};

}  // namespace ghem
