#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ghem {

// Hourly market series: the energy price plus the exogenous features the
// price forecaster consumes.
struct MarketRecord {
    std::int64_t hour = 0;             // hour index (see timeutil)
    double price = 0.0;                // $/kWh; negative prices are legal
    double market_demand_mw = 0.0;
    double gen_nuclear_mw = 0.0;
    double gen_gas_mw = 0.0;
    double gen_hydro_mw = 0.0;
    double gen_wind_mw = 0.0;
    double gen_solar_mw = 0.0;
    double gen_biofuel_mw = 0.0;
    int is_holiday = 0;
    bool interpolated = false;  // gap-filled during ingestion
};

struct PriceSeries {
    std::vector<MarketRecord> records;  // contiguous hourly, ascending

    std::int64_t start_hour() const { return records.empty() ? 0 : records.front().hour; }
    std::size_t size() const { return records.size(); }
    // Throws DataError when the hour is outside the series.
    const MarketRecord& at_hour(std::int64_t hour) const;
    void check_contiguous() const;
};

struct TariffConfig {
    double icra_rate = 0.02;         // $/kWh adder (GA / ICRA)
    double peak_demand_rate = 10.0;  // $/kW-month
};

struct CostBreakdown {
    double energy_cost = 0.0;  // sum of price * energy
    double icra_cost = 0.0;
    double peak_charge = 0.0;
    double total = 0.0;
    double peak_kw = 0.0;
    double energy_kwh = 0.0;
};

struct EnergyInterval {
    std::int64_t hour = 0;
    double kwh = 0.0;
};

// Evaluates the monthly bill: sum over intervals of (price + icra) * energy
// plus the demand charge on the peak interval. All intervals and prices must
// share one calendar month and align hour-for-hour. Monetary sums accumulate
// in integer cents to keep annual totals drift-free.
CostBreakdown monthly_cost(const std::vector<EnergyInterval>& energy, const PriceSeries& prices,
                           const TariffConfig& tariff, double interval_hours = 1.0);

struct MonthlyComparison {
    int month = 0;  // 1..12
    CostBreakdown baseline;
    CostBreakdown optimized;
};

struct AnnualReport {
    std::vector<MonthlyComparison> months;
    CostBreakdown baseline_total;   // peak_kw holds the yearly max
    CostBreakdown optimized_total;
    double energy_reduction_pct = 0.0;
    double cost_reduction_pct = 0.0;
    double peak_reduction_pct = 0.0;
};

double percent_reduction(double baseline, double optimized);

// Builds the yearly comparison table from 12 monthly breakdowns per scenario.
AnnualReport annual_report(const std::vector<CostBreakdown>& baseline,
                           const std::vector<CostBreakdown>& optimized);

void write_annual_report_csv(const AnnualReport& report, const std::string& path);
std::string annual_report_json(const AnnualReport& report);

// Market CSV schema: timestamp_iso8601, hoep_dollars_per_kwh,
// market_demand_mw, gen_nuclear_mw, gen_gas_mw, gen_hydro_mw, gen_wind_mw,
// gen_solar_mw, gen_biofuel_mw, is_holiday. Gaps of at most three hours are
// linearly interpolated (and flagged); longer gaps and non-monotone
// timestamps are fatal.
PriceSeries ingest_market_csv(const std::string& path);
void write_market_csv(const PriceSeries& series, const std::string& path);

}  // namespace ghem
