#include "ghem/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ghem/csv.hpp"
#include "ghem/timeutil.hpp"

namespace ghem {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty series");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile outside [0,100]");
    std::sort(values.begin(), values.end());
    const double idx = p / 100.0 * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(idx);
    const std::size_t hi = std::min(values.size() - 1, lo + 1);
    const double frac = idx - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

CleanResult iqr_clean(const std::vector<double>& series, const QuantileCleanConfig& cfg) {
    if (series.size() < 10)
        throw std::invalid_argument("outlier cleaning needs at least 10 samples");
    const double q1 = percentile(series, cfg.lower_pct);
    const double q3 = percentile(series, cfg.upper_pct);
    const double iqr = q3 - q1;
    CleanResult out;
    out.lower_bound = q1 - cfg.k * iqr;
    out.upper_bound = q3 + cfg.k * iqr;
    out.removed.assign(series.size(), 0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i] < out.lower_bound || series[i] > out.upper_bound) {
            out.removed[i] = 1;
            ++out.removed_count;
        } else {
            out.values.push_back(series[i]);
        }
    }
    return out;
}

std::vector<double> interpolate_removed(const std::vector<double>& series,
                                        const std::vector<int>& removed) {
    if (series.size() != removed.size())
        throw std::invalid_argument("series/mask length mismatch");
    std::vector<double> out = series;
    const std::size_t n = out.size();
    std::size_t i = 0;
    while (i < n) {
        if (!removed[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && removed[j]) ++j;
        const bool has_left = i > 0;
        const bool has_right = j < n;
        if (!has_left && !has_right)
            throw DataError("every sample was removed as an outlier");
        for (std::size_t k = i; k < j; ++k) {
            if (has_left && has_right) {
                const double f = static_cast<double>(k - (i - 1)) /
                                 static_cast<double>(j - (i - 1));
                out[k] = out[i - 1] + f * (out[j] - out[i - 1]);
            } else if (has_left) {
                out[k] = out[i - 1];
            } else {
                out[k] = out[j];
            }
        }
        i = j;
    }
    return out;
}

std::vector<std::string> price_feature_columns() {
    return {"day_of_week",     "hour_of_day",   "year",         "temp_c",
            "wind_speed_ms",   "season",        "market_demand_mw", "is_holiday",
            "gen_nuclear_mw",  "gen_gas_mw",    "gen_hydro_mw", "gen_wind_mw",
            "gen_solar_mw",    "gen_biofuel_mw"};
}

std::vector<std::string> solar_feature_columns() {
    return {"hour_of_day",          "day_of_year",          "year",
            "temp_c",               "dew_point_c",          "wind_speed_ms",
            "station_pressure_kpa", "sea_level_pressure_kpa", "wind_dir_deg",
            "rh_pct"};
}

namespace {

int season_of(std::int64_t hour) {
    const int month = civil_from_hour_index(hour).month;
    if (month == 12 || month <= 2) return 0;  // DJF
    if (month <= 5) return 1;                 // MAM
    if (month <= 8) return 2;                 // JJA
    return 3;                                 // SON
}

}  // namespace

FeatureTable build_price_features(const PriceSeries& market,
                                  const std::vector<WeatherRecord>& weather) {
    FeatureTable t;
    t.columns = price_feature_columns();
    std::map<std::int64_t, const WeatherRecord*> by_hour;
    for (const auto& w : weather) by_hour[w.hour] = &w;

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> targets;
    for (const auto& rec : market.records) {
        const auto it = by_hour.find(rec.hour);
        if (it == by_hour.end()) continue;
        const WeatherRecord& wx = *it->second;
        Eigen::VectorXd row(14);
        const CivilDateTime dt = civil_from_hour_index(rec.hour);
        row << day_of_week(rec.hour), dt.hour, dt.year, wx.temp_c, wx.wind_speed_ms,
            season_of(rec.hour), rec.market_demand_mw, rec.is_holiday, rec.gen_nuclear_mw,
            rec.gen_gas_mw, rec.gen_hydro_mw, rec.gen_wind_mw, rec.gen_solar_mw,
            rec.gen_biofuel_mw;
        rows.push_back(row);
        targets.push_back(rec.price);
        t.hours.push_back(rec.hour);
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), 14);
    t.target.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        t.values.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        t.target[static_cast<Eigen::Index>(i)] = targets[i];
    }
    return t;
}

FeatureTable build_solar_features(const std::vector<WeatherRecord>& weather) {
    FeatureTable t;
    t.columns = solar_feature_columns();
    t.values.resize(static_cast<Eigen::Index>(weather.size()), 10);
    t.target.resize(static_cast<Eigen::Index>(weather.size()));
    for (std::size_t i = 0; i < weather.size(); ++i) {
        const WeatherRecord& w = weather[i];
        const CivilDateTime dt = civil_from_hour_index(w.hour);
        Eigen::VectorXd row(10);
        row << dt.hour, day_of_year(w.hour), dt.year, w.temp_c, w.dew_point_c, w.wind_speed_ms,
            w.station_pressure_kpa, w.sea_level_pressure_kpa, w.wind_dir_deg, w.rh_pct;
        t.values.row(static_cast<Eigen::Index>(i)) = row.transpose();
        t.target[static_cast<Eigen::Index>(i)] = w.ghi_wm2;
        t.hours.push_back(w.hour);
    }
    return t;
}

Normalizer Normalizer::fit(const Eigen::MatrixXd& rows) {
    Normalizer n;
    n.mean = rows.colwise().mean();
    n.std.resize(rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        const double var = (rows.col(c).array() - n.mean[c]).square().mean();
        n.std[c] = std::sqrt(var);
        if (n.std[c] < 1e-12) n.std[c] = 1.0;  // constant column
    }
    return n;
}

Eigen::MatrixXd Normalizer::normalize(const Eigen::MatrixXd& rows) const {
    Eigen::MatrixXd out = rows;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= std.transpose().array();
    return out;
}

Eigen::MatrixXd Normalizer::denormalize(const Eigen::MatrixXd& rows) const {
    Eigen::MatrixXd out = rows;
    out.array().rowwise() *= std.transpose().array();
    out.rowwise() += mean.transpose();
    return out;
}

std::vector<TrainingSample> build_windows(const FeatureTable& table, int window, int horizon) {
    std::vector<TrainingSample> out;
    const Eigen::Index n = table.values.rows();
    if (static_cast<std::size_t>(n) != table.hours.size())
        throw std::invalid_argument("feature table hours/rows mismatch");
    for (Eigen::Index start = 0; start + window + horizon <= n; ++start) {
        // Reject any window or target that spans a gap in the hour index.
        bool contiguous = true;
        for (Eigen::Index k = 1; k < window + horizon; ++k)
            if (table.hours[start + k] != table.hours[start + k - 1] + 1) {
                contiguous = false;
                break;
            }
        if (!contiguous) continue;
        TrainingSample s;
        s.window = table.values.middleRows(start, window);
        s.target = table.target.segment(start + window, horizon);
        out.push_back(std::move(s));
    }
    return out;
}

SplitWindows split_and_window(const FeatureTable& table, int window, int horizon) {
    const Eigen::Index n = table.values.rows();
    // Day-edge split boundaries keep whole days inside one split.
    const auto day_floor = [](Eigen::Index rows) { return (rows / 24) * 24; };
    const Eigen::Index train_n =
        day_floor(static_cast<Eigen::Index>(std::llround(0.7 * static_cast<double>(n))));
    const Eigen::Index val_n =
        day_floor(static_cast<Eigen::Index>(std::llround(0.9 * static_cast<double>(n)))) -
        train_n;
    if (train_n < window + horizon || val_n < window + horizon)
        throw std::invalid_argument("series too short for a 70-20-10 split");

    const auto slice = [&](Eigen::Index begin, Eigen::Index count) {
        FeatureTable part;
        part.columns = table.columns;
        part.values = table.values.middleRows(begin, count);
        part.target = table.target.segment(begin, count);
        part.hours.assign(table.hours.begin() + begin, table.hours.begin() + begin + count);
        return part;
    };

    FeatureTable train_t = slice(0, train_n);
    FeatureTable val_t = slice(train_n, val_n);
    FeatureTable test_t = slice(train_n + val_n, n - train_n - val_n);

    SplitWindows out;
    out.feature_norm = Normalizer::fit(train_t.values);
    out.target_mean = train_t.target.mean();
    const double var = (train_t.target.array() - out.target_mean).square().mean();
    out.target_std = std::sqrt(var) < 1e-12 ? 1.0 : std::sqrt(var);

    const auto normalize_table = [&](FeatureTable& t) {
        t.values = out.feature_norm.normalize(t.values);
        t.target = (t.target.array() - out.target_mean) / out.target_std;
    };
    normalize_table(train_t);
    normalize_table(val_t);
    normalize_table(test_t);

    out.train = build_windows(train_t, window, horizon);
    out.val = build_windows(val_t, window, horizon);
    out.test = build_windows(test_t, window, horizon);
    return out;
}

std::vector<double> ensemble_weights(int count, double lambda) {
    if (count <= 0) throw std::invalid_argument("ensemble needs at least one prediction");
    std::vector<double> w(count);
    // Subtract the largest exponent for overflow safety at large lambda.
    double sum = 0.0;
    for (int i = 0; i < count; ++i) {
        w[i] = std::exp(lambda * (i - (count - 1)));
        sum += w[i];
    }
    for (double& x : w) x /= sum;
    return w;
}

double ensemble_combine(const std::vector<double>& preds, double lambda) {
    if (preds.empty()) throw DataError("no predictions available to combine");
    const auto w = ensemble_weights(static_cast<int>(preds.size()), lambda);
    double out = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) out += w[i] * preds[i];
    return out;
}

void RollingEnsemble::record(std::int64_t issue_hour, const std::vector<double>& predictions) {
    issues_[issue_hour] = predictions;
    // Retain only issues that can still cover a future hour.
    const std::int64_t horizon = static_cast<std::int64_t>(predictions.size());
    while (!issues_.empty() && issues_.begin()->first + horizon + 24 < issue_hour)
        issues_.erase(issues_.begin());
}

double RollingEnsemble::combined(std::int64_t hour) const {
    std::vector<double> preds;  // oldest issue first
    for (const auto& [issued, values] : issues_) {
        const std::int64_t offset = hour - issued - 1;
        if (offset >= 0 && offset < static_cast<std::int64_t>(values.size()))
            preds.push_back(values[static_cast<std::size_t>(offset)]);
    }
    if (preds.empty())
        throw DataError("no stored forecast covers " + format_iso8601_hour(hour));
    return ensemble_combine(preds, lambda_);
}

int RollingEnsemble::available(std::int64_t hour) const {
    int count = 0;
    for (const auto& [issued, values] : issues_) {
        const std::int64_t offset = hour - issued - 1;
        if (offset >= 0 && offset < static_cast<std::int64_t>(values.size())) ++count;
    }
    return count;
}

std::vector<double> persistence_baseline(const std::vector<double>& history, int horizon) {
    if (static_cast<int>(history.size()) < horizon)
        throw std::invalid_argument("persistence needs at least one day of history");
    return std::vector<double>(history.end() - horizon, history.end());
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("rmse size mismatch");
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(se / static_cast<double>(a.size()));
}

std::vector<double> ForecastModel::predict_raw(const Eigen::MatrixXd& raw_window) const {
    const Eigen::MatrixXd normed = feature_norm.normalize(raw_window);
    const Eigen::VectorXd out = model.predict(normed);
    std::vector<double> raw(out.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) raw[i] = out[i] * target_std + target_mean;
    return raw;
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

constexpr char kMagic[8] = {'G', 'H', 'E', 'M', 'T', 'F', '0', '1'};

}  // namespace

void ForecastModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    out.write(kMagic, sizeof kMagic);
    write_u32(out, static_cast<std::uint32_t>(config.layers));
    write_u32(out, static_cast<std::uint32_t>(config.heads));
    write_u32(out, static_cast<std::uint32_t>(config.model_dim));
    write_u32(out, static_cast<std::uint32_t>(config.feedforward_dim));
    write_u32(out, static_cast<std::uint32_t>(config.window));
    write_u32(out, static_cast<std::uint32_t>(config.horizon));
    write_u32(out, static_cast<std::uint32_t>(config.input_features));
    write_f64(out, config.dropout);
    write_u32(out, static_cast<std::uint32_t>(feature_columns.size()));
    for (const auto& name : feature_columns) {
        char buf[64] = {0};
        std::strncpy(buf, name.c_str(), sizeof buf - 1);
        out.write(buf, sizeof buf);
    }
    for (Eigen::Index i = 0; i < feature_norm.mean.size(); ++i)
        write_f64(out, feature_norm.mean[i]);
    for (Eigen::Index i = 0; i < feature_norm.std.size(); ++i)
        write_f64(out, feature_norm.std[i]);
    write_f64(out, target_mean);
    write_f64(out, target_std);
    model.serialize_params(out);
    if (!out) throw DataError("failed writing checkpoint '" + path + "'");
}

ForecastModel ForecastModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint '" + path + "'");
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError("'" + path + "' is not a model checkpoint (bad magic)");
    AttentionModelConfig cfg;
    cfg.layers = static_cast<int>(read_u32(in));
    cfg.heads = static_cast<int>(read_u32(in));
    cfg.model_dim = static_cast<int>(read_u32(in));
    cfg.feedforward_dim = static_cast<int>(read_u32(in));
    cfg.window = static_cast<int>(read_u32(in));
    cfg.horizon = static_cast<int>(read_u32(in));
    cfg.input_features = static_cast<int>(read_u32(in));
    cfg.dropout = read_f64(in);
    if (!in) throw DataError("checkpoint header truncated");

    ForecastModel fm(cfg, 0);
    const std::uint32_t ncols = read_u32(in);
    if (ncols != static_cast<std::uint32_t>(cfg.input_features))
        throw DataError("checkpoint feature count does not match the model config");
    for (std::uint32_t i = 0; i < ncols; ++i) {
        char buf[64];
        in.read(buf, sizeof buf);
        buf[63] = 0;
        fm.feature_columns.emplace_back(buf);
    }
    fm.feature_norm.mean.resize(ncols);
    fm.feature_norm.std.resize(ncols);
    for (std::uint32_t i = 0; i < ncols; ++i) fm.feature_norm.mean[i] = read_f64(in);
    for (std::uint32_t i = 0; i < ncols; ++i) fm.feature_norm.std[i] = read_f64(in);
    fm.target_mean = read_f64(in);
    fm.target_std = read_f64(in);
    fm.model.deserialize_params(in);
    return fm;
}

}  // namespace ghem
