#include "ghem/tariff.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ghem/csv.hpp"
#include "ghem/timeutil.hpp"

namespace ghem {

namespace {

// Fixed-point accumulation in millicents: keeps month and year sums exact
// regardless of summation order.
std::int64_t to_millicents(double dollars) { return std::llround(dollars * 1e5); }
double from_millicents(std::int64_t mc) { return static_cast<double>(mc) / 1e5; }

}  // namespace

const MarketRecord& PriceSeries::at_hour(std::int64_t hour) const {
    if (records.empty()) throw DataError("price series is empty");
    const std::int64_t offset = hour - records.front().hour;
    if (offset < 0 || offset >= static_cast<std::int64_t>(records.size()))
        throw DataError("price series does not cover hour " + format_iso8601_hour(hour));
    return records[static_cast<std::size_t>(offset)];
}

void PriceSeries::check_contiguous() const {
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].hour != records[i - 1].hour + 1)
            throw DataError("price series not contiguous at " +
                            format_iso8601_hour(records[i].hour));
}

CostBreakdown monthly_cost(const std::vector<EnergyInterval>& energy, const PriceSeries& prices,
                           const TariffConfig& tariff, double interval_hours) {
    CostBreakdown out;
    if (energy.empty()) return out;

    const CivilDateTime first = civil_from_hour_index(energy.front().hour);
    std::int64_t energy_mwh_scaled = 0;  // watt-hours, exact enough for sums
    std::int64_t energy_mc = 0, icra_mc = 0;
    double peak_kwh = 0.0;
    for (const auto& iv : energy) {
        const CivilDateTime dt = civil_from_hour_index(iv.hour);
        if (dt.year != first.year || dt.month != first.month)
            throw DataError("energy intervals span more than one calendar month");
        const MarketRecord& rec = prices.at_hour(iv.hour);
        if (rec.hour != iv.hour)
            throw DataError("price series misaligned at " + format_iso8601_hour(iv.hour));
        energy_mc += to_millicents(rec.price * iv.kwh);
        icra_mc += to_millicents(tariff.icra_rate * iv.kwh);
        energy_mwh_scaled += std::llround(iv.kwh * 1e3);
        peak_kwh = std::max(peak_kwh, iv.kwh);
    }
    out.energy_cost = from_millicents(energy_mc);
    out.icra_cost = from_millicents(icra_mc);
    out.peak_kw = peak_kwh / interval_hours;
    out.peak_charge = from_millicents(to_millicents(tariff.peak_demand_rate * out.peak_kw));
    out.total = from_millicents(energy_mc + icra_mc +
                                to_millicents(tariff.peak_demand_rate * out.peak_kw));
    out.energy_kwh = static_cast<double>(energy_mwh_scaled) / 1e3;
    return out;
}

double percent_reduction(double baseline, double optimized) {
    if (baseline == 0.0) return 0.0;
    return (baseline - optimized) / baseline * 100.0;
}

AnnualReport annual_report(const std::vector<CostBreakdown>& baseline,
                           const std::vector<CostBreakdown>& optimized) {
    if (baseline.size() != 12 || optimized.size() != 12)
        throw std::invalid_argument("annual report requires 12 monthly breakdowns per scenario");

    AnnualReport rep;
    auto accumulate = [](const std::vector<CostBreakdown>& months) {
        CostBreakdown t;
        for (const auto& m : months) {
            t.energy_cost += m.energy_cost;
            t.icra_cost += m.icra_cost;
            t.peak_charge += m.peak_charge;
            t.total += m.total;
            t.energy_kwh += m.energy_kwh;
            t.peak_kw = std::max(t.peak_kw, m.peak_kw);
        }
        return t;
    };
    for (int m = 0; m < 12; ++m) rep.months.push_back({m + 1, baseline[m], optimized[m]});
    rep.baseline_total = accumulate(baseline);
    rep.optimized_total = accumulate(optimized);
    rep.energy_reduction_pct =
        percent_reduction(rep.baseline_total.energy_kwh, rep.optimized_total.energy_kwh);
    rep.cost_reduction_pct =
        percent_reduction(rep.baseline_total.total, rep.optimized_total.total);
    rep.peak_reduction_pct =
        percent_reduction(rep.baseline_total.peak_kw, rep.optimized_total.peak_kw);
    return rep;
}

void write_annual_report_csv(const AnnualReport& rep, const std::string& path) {
    CsvWriter w(path);
    w.write_row({"month", "energy_mwh_base", "energy_mwh_opt", "peak_mw_base", "peak_mw_opt",
                 "energy_cost_base", "energy_cost_opt", "peak_charge_base", "peak_charge_opt",
                 "icra_cost_base", "icra_cost_opt", "total_cost_base", "total_cost_opt",
                 "energy_reduction_pct", "cost_reduction_pct"});
    const auto row = [&](const std::string& label, const CostBreakdown& b,
                         const CostBreakdown& o) {
        w.write_row({label, fmt_double(b.energy_kwh / 1e3, 3), fmt_double(o.energy_kwh / 1e3, 3),
                     fmt_double(b.peak_kw / 1e3, 3), fmt_double(o.peak_kw / 1e3, 3),
                     fmt_double(b.energy_cost, 2), fmt_double(o.energy_cost, 2),
                     fmt_double(b.peak_charge, 2), fmt_double(o.peak_charge, 2),
                     fmt_double(b.icra_cost, 2), fmt_double(o.icra_cost, 2),
                     fmt_double(b.total, 2), fmt_double(o.total, 2),
                     fmt_double(percent_reduction(b.energy_kwh, o.energy_kwh), 2),
                     fmt_double(percent_reduction(b.total, o.total), 2)});
    };
    for (const auto& m : rep.months)
        row(std::to_string(m.month), m.baseline, m.optimized);
    row("annual", rep.baseline_total, rep.optimized_total);
}

std::string annual_report_json(const AnnualReport& rep) {
    nlohmann::json j;
    const auto breakdown = [](const CostBreakdown& b) {
        return nlohmann::json{{"energy_kwh", b.energy_kwh}, {"peak_kw", b.peak_kw},
                              {"energy_cost", b.energy_cost}, {"icra_cost", b.icra_cost},
                              {"peak_charge", b.peak_charge}, {"total", b.total}};
    };
    for (const auto& m : rep.months)
        j["months"].push_back({{"month", m.month},
                               {"baseline", breakdown(m.baseline)},
                               {"optimized", breakdown(m.optimized)}});
    j["annual"] = {{"baseline", breakdown(rep.baseline_total)},
                   {"optimized", breakdown(rep.optimized_total)},
                   {"energy_reduction_pct", rep.energy_reduction_pct},
                   {"cost_reduction_pct", rep.cost_reduction_pct},
                   {"peak_reduction_pct", rep.peak_reduction_pct}};
    return j.dump(2);
}

PriceSeries ingest_market_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_ts = t.require_column("timestamp_iso8601");
    const int c_price = t.require_column("hoep_dollars_per_kwh");
    const int c_dem = t.require_column("market_demand_mw");
    const int c_nuc = t.require_column("gen_nuclear_mw");
    const int c_gas = t.require_column("gen_gas_mw");
    const int c_hyd = t.require_column("gen_hydro_mw");
    const int c_wnd = t.require_column("gen_wind_mw");
    const int c_sol = t.require_column("gen_solar_mw");
    const int c_bio = t.require_column("gen_biofuel_mw");
    const int c_hol = t.require_column("is_holiday");

    PriceSeries series;
    std::int64_t prev_hour = 0;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.line_numbers[i];
        MarketRecord rec;
        try {
            rec.hour = parse_iso8601_hour(row[c_ts]);
        } catch (const std::invalid_argument& e) {
            throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
        }
        rec.price = parse_double_field(row[c_price], path, line, "hoep_dollars_per_kwh");
        rec.market_demand_mw = parse_double_field(row[c_dem], path, line, "market_demand_mw");
        rec.gen_nuclear_mw = parse_double_field(row[c_nuc], path, line, "gen_nuclear_mw");
        rec.gen_gas_mw = parse_double_field(row[c_gas], path, line, "gen_gas_mw");
        rec.gen_hydro_mw = parse_double_field(row[c_hyd], path, line, "gen_hydro_mw");
        rec.gen_wind_mw = parse_double_field(row[c_wnd], path, line, "gen_wind_mw");
        rec.gen_solar_mw = parse_double_field(row[c_sol], path, line, "gen_solar_mw");
        rec.gen_biofuel_mw = parse_double_field(row[c_bio], path, line, "gen_biofuel_mw");
        rec.is_holiday = static_cast<int>(parse_int_field(row[c_hol], path, line, "is_holiday"));

        if (!series.records.empty()) {
            const std::int64_t gap = rec.hour - prev_hour;
            if (gap <= 0)
                throw DataError(path + ":" + std::to_string(line) +
                                ": timestamps must be strictly increasing");
            if (gap > 4)
                throw DataError(path + ":" + std::to_string(line) + ": gap of " +
                                std::to_string(gap - 1) + " h exceeds the 3 h interpolation limit");
            const MarketRecord& prev = series.records.back();
            for (std::int64_t k = 1; k < gap; ++k) {
                const double f = static_cast<double>(k) / static_cast<double>(gap);
                MarketRecord fill;
                fill.hour = prev_hour + k;
                fill.interpolated = true;
                fill.price = prev.price + f * (rec.price - prev.price);
                fill.market_demand_mw =
                    prev.market_demand_mw + f * (rec.market_demand_mw - prev.market_demand_mw);
                fill.gen_nuclear_mw =
                    prev.gen_nuclear_mw + f * (rec.gen_nuclear_mw - prev.gen_nuclear_mw);
                fill.gen_gas_mw = prev.gen_gas_mw + f * (rec.gen_gas_mw - prev.gen_gas_mw);
                fill.gen_hydro_mw = prev.gen_hydro_mw + f * (rec.gen_hydro_mw - prev.gen_hydro_mw);
                fill.gen_wind_mw = prev.gen_wind_mw + f * (rec.gen_wind_mw - prev.gen_wind_mw);
                fill.gen_solar_mw = prev.gen_solar_mw + f * (rec.gen_solar_mw - prev.gen_solar_mw);
                fill.gen_biofuel_mw =
                    prev.gen_biofuel_mw + f * (rec.gen_biofuel_mw - prev.gen_biofuel_mw);
                fill.is_holiday = prev.is_holiday;
                series.records.push_back(fill);
            }
        }
        series.records.push_back(rec);
        prev_hour = rec.hour;
    }
    if (series.records.empty()) throw DataError("market CSV '" + path + "' has no data rows");
    return series;
}

void write_market_csv(const PriceSeries& series, const std::string& path) {
    CsvWriter w(path);
    w.write_row({"timestamp_iso8601", "hoep_dollars_per_kwh", "market_demand_mw",
                 "gen_nuclear_mw", "gen_gas_mw", "gen_hydro_mw", "gen_wind_mw", "gen_solar_mw",
                 "gen_biofuel_mw", "is_holiday"});
    for (const auto& r : series.records)
        w.write_row({format_iso8601_hour(r.hour), fmt_double(r.price, 5),
                     fmt_double(r.market_demand_mw, 1), fmt_double(r.gen_nuclear_mw, 1),
                     fmt_double(r.gen_gas_mw, 1), fmt_double(r.gen_hydro_mw, 1),
                     fmt_double(r.gen_wind_mw, 1), fmt_double(r.gen_solar_mw, 1),
                     fmt_double(r.gen_biofuel_mw, 1), std::to_string(r.is_holiday)});
}

}  // namespace ghem
