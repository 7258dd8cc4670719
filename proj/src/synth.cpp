#include "ghem/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ghem/timeutil.hpp"

namespace ghem {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double dew_point_from_rh(double temp_c, double rh_pct) {
    const double gamma =
        std::log(rh_pct / 100.0) + 17.625 * temp_c / (243.04 + temp_c);
    return 243.04 * gamma / (17.625 - gamma);
}

bool is_fixed_holiday(std::int64_t hour) {
    const CivilDateTime dt = civil_from_hour_index(hour);
    return (dt.month == 1 && dt.day == 1) || (dt.month == 7 && dt.day == 1) ||
           (dt.month == 12 && dt.day == 25) || (dt.month == 12 && dt.day == 26);
}

}  // namespace

std::vector<WeatherRecord> generate_weather_year(int year, std::uint64_t seed) {
    const std::int64_t start = hour_index({year, 1, 1, 0});
    const std::int64_t end = hour_index({year + 1, 1, 1, 0});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<WeatherRecord> out;
    out.reserve(static_cast<std::size_t>(end - start));
    double temp_ar = 0.0;   // slow synoptic temperature anomaly
    double cloud_ar = 0.0;  // multi-day cloud systems
    double wind_ar = 0.0;
    double dir = 200.0;

    for (std::int64_t h = start; h < end; ++h) {
        const int doy = day_of_year(h);
        const int hod = static_cast<int>(h % 24);

        temp_ar = 0.97 * temp_ar + 0.6 * gauss(rng);
        cloud_ar = 0.98 * cloud_ar + 0.075 * gauss(rng);
        wind_ar = 0.9 * wind_ar + 0.5 * gauss(rng);

        const double seasonal = 9.0 - 13.0 * std::cos(kTwoPi * (doy - 15) / 365.0);
        const double diurnal = 4.0 * std::sin(kTwoPi * (hod - 15) / 24.0);
        const double t_out = seasonal + diurnal + temp_ar;

        const double daylen = 12.0 + 3.5 * std::sin(kTwoPi * (doy - 80) / 365.0);
        const double sunrise = 12.0 - 0.5 * daylen;
        const double peak = 350.0 + 500.0 * (daylen - 8.5) / 7.0;
        double ghi = 0.0;
        if (hod > sunrise && hod < sunrise + daylen) {
            const double shape = std::sin(M_PI * (hod - sunrise) / daylen);
            const double cloud = std::clamp(0.78 + cloud_ar, 0.15, 1.0);
            ghi = std::max(0.0, peak * shape * cloud);
        }

        WeatherRecord w;
        w.hour = h;
        w.ghi_wm2 = ghi;
        w.temp_c = t_out;
        w.rh_pct = std::clamp(76.0 - 0.8 * (t_out - 10.0) + 3.0 * gauss(rng), 30.0, 98.0);
        w.dew_point_c = dew_point_from_rh(t_out, w.rh_pct);
        w.wind_speed_ms = std::clamp(4.0 + wind_ar, 0.2, 18.0);
        w.station_pressure_kpa =
            101.3 + 1.2 * std::sin(kTwoPi * doy / 29.0) + 0.2 * gauss(rng);
        w.sea_level_pressure_kpa = w.station_pressure_kpa + 0.9;
        dir += 15.0 * gauss(rng);
        w.wind_dir_deg = std::fmod(std::fmod(dir, 360.0) + 360.0, 360.0);
        out.push_back(w);
    }
    return out;
}

PriceSeries generate_market_year(int year, std::uint64_t seed,
                                 const std::vector<WeatherRecord>& weather) {
    std::mt19937_64 rng(seed ^ 0xabcdef1234567890ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    PriceSeries series;
    double wind_gen_ar = 0.0;
    for (const auto& wx : weather) {
        const std::int64_t h = wx.hour;
        const int hod = static_cast<int>(h % 24);
        const int dow = day_of_week(h);
        const bool weekend = dow >= 5;
        const bool holiday = is_fixed_holiday(h);

        // Demand: heating/cooling degree response plus a work-hours hump.
        const double hdd = std::max(0.0, 15.0 - wx.temp_c);
        const double cdd = std::max(0.0, wx.temp_c - 21.0);
        const double hump =
            (hod >= 7 && hod <= 21) ? 1.0 + 0.35 * std::sin(M_PI * (hod - 7) / 14.0) : 0.85;
        double demand = (12200.0 + 95.0 * hdd + 190.0 * cdd) * hump;
        if (weekend || holiday) demand *= 0.92;
        demand += 120.0 * gauss(rng);

        wind_gen_ar = 0.93 * wind_gen_ar + 0.35 * gauss(rng);

        MarketRecord rec;
        rec.hour = h;
        rec.market_demand_mw = demand;
        rec.gen_nuclear_mw = 9300.0 + 150.0 * std::sin(kTwoPi * day_of_year(h) / 180.0);
        rec.gen_hydro_mw = 4300.0 + 600.0 * std::sin(kTwoPi * (day_of_year(h) - 110) / 365.0);
        rec.gen_wind_mw = std::clamp(1400.0 * (1.0 + wind_gen_ar), 50.0, 4200.0);
        rec.gen_solar_mw = 0.9 * wx.ghi_wm2;
        rec.gen_biofuel_mw = 150.0;
        rec.gen_gas_mw = std::max(
            0.0, demand - rec.gen_nuclear_mw - rec.gen_hydro_mw - rec.gen_wind_mw -
                     rec.gen_solar_mw - rec.gen_biofuel_mw);
        rec.is_holiday = holiday ? 1 : 0;

        // Two-tier base price plus a demand response and rare events.
        const bool on_peak = !weekend && !holiday && hod >= 7 && hod < 19;
        double price = (on_peak ? 0.065 : 0.028) + 9.0e-6 * (demand - 12000.0);
        price += 0.002 * gauss(rng);
        const double event = unit(rng);
        if (event < 0.006) price += 0.12 + 0.25 * unit(rng);           // scarcity spike
        else if (event > 0.995 && !on_peak) price = -0.005 - 0.02 * unit(rng);  // surplus dip
        rec.price = price;

        series.records.push_back(rec);
    }
    return series;
}

}  // namespace ghem
