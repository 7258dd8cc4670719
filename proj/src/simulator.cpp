#include "ghem/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghem/csv.hpp"
#include "ghem/timeutil.hpp"

namespace ghem {

const char* load_class_name(LoadClass c) {
    switch (c) {
        case LoadClass::Fan: return "fan";
        case LoadClass::Dehumidifier: return "dehumidifier";
        case LoadClass::Fogger: return "fogger";
        case LoadClass::Led: return "led";
        case LoadClass::Co2Injector: return "co2_injector";
        case LoadClass::Chiller: return "chiller";
        case LoadClass::Heater: return "heater";
    }
    return "?";
}

std::vector<DeviceGroup> GreenhouseConfig::default_devices() {
    // Rated powers follow the reference loads (kW); counts size the fleet
    // for a one-hectare house with full-range supplemental lighting.
    return {
        {LoadClass::Fan, 100, 0.13},       {LoadClass::Dehumidifier, 40, 2.2},
        {LoadClass::Fogger, 40, 2.2},      {LoadClass::Led, 6000, 0.6},
        {LoadClass::Co2Injector, 10, 8.0}, {LoadClass::Chiller, 300, 6.6},
        {LoadClass::Heater, 600, 3.3},
    };
}

const DeviceGroup& GreenhouseConfig::group(LoadClass c) const {
    for (const auto& g : devices)
        if (g.load_class == c) return g;
    throw std::invalid_argument(std::string("device inventory lacks class ") +
                                load_class_name(c));
}

void GreenhouseConfig::check_valid() const {
    if (!(area_m2 > 0) || !(height_m > 0) || !(c_air_kj_per_c > 0) ||
        !(led_efficacy_umol_per_j > 0) || !(solar_to_ppfd_umol_per_j > 0) ||
        !(envelope_ua_kw_per_c > 0))
        throw std::invalid_argument("greenhouse physical parameters must be positive");
    if (!(cover_transmittance > 0.0) || cover_transmittance > 1.0)
        throw std::invalid_argument("cover transmittance must lie in (0,1]");
    if (devices.empty()) throw std::invalid_argument("device inventory is empty");
    for (const auto& g : devices)
        if (g.count < 0 || g.rated_kw <= 0)
            throw std::invalid_argument("bad device group");
}

double GreenhouseConfig::solar_ppfd_from_ghi(double ghi_wm2) const {
    return std::max(0.0, ghi_wm2) * cover_transmittance * solar_to_ppfd_umol_per_j;
}

double GreenhouseConfig::solar_gain_kw(double ghi_wm2) const {
    return std::max(0.0, ghi_wm2) * cover_transmittance * area_m2 * 1e-3;
}

double LoadDispatch::Group::total_w() const {
    double s = 0.0;
    for (double w : unit_w) s += w;
    return s;
}

LoadDispatch::Group& LoadDispatch::group(LoadClass c) {
    for (auto& g : groups)
        if (g.load_class == c) return g;
    throw std::invalid_argument(std::string("dispatch lacks class ") + load_class_name(c));
}

const LoadDispatch::Group& LoadDispatch::group(LoadClass c) const {
    return const_cast<LoadDispatch*>(this)->group(c);
}

LoadDispatch LoadDispatch::for_config(const GreenhouseConfig& config) {
    LoadDispatch d;
    for (const auto& g : config.devices) {
        Group grp;
        grp.load_class = g.load_class;
        grp.rated_kw = g.rated_kw;
        grp.unit_w.assign(static_cast<std::size_t>(g.count), 0.0);
        d.groups.push_back(std::move(grp));
    }
    return d;
}

double saturation_pressure_kpa(double t) {
    return 0.61094 * std::exp(17.625 * t / (t + 243.04));
}

double relative_humidity_pct(double p_bar_kpa, double p_sat_kpa) {
    if (p_sat_kpa <= 0.0) throw std::invalid_argument("saturation pressure must be positive");
    return p_bar_kpa / p_sat_kpa * 100.0;
}

double rh_from_dew_point(double temp_c, double dew_point_c) {
    return relative_humidity_pct(saturation_pressure_kpa(dew_point_c),
                                 saturation_pressure_kpa(temp_c));
}

namespace {

// Uniform utilization across a fleet: every unit shares the same w.
void set_uniform(LoadDispatch::Group& g, double w) {
    for (auto& u : g.unit_w) u = std::clamp(w, 0.0, 1.0);
}

// kW of heat carried per air change per degree of inside-outside difference.
double vent_kw_per_ach_per_c(const GreenhouseConfig& cfg) {
    const double volume = cfg.area_m2 * cfg.height_m;          // m^3
    return 1.2 * 1.006 * volume / 3600.0;                      // rho*cp*V / 3600s
}

}  // namespace

double step_thermal(const EnvironmentState& state, const WeatherRecord& weather,
                    const GreenhouseConfig& config, const double band[2], double dt_hours,
                    LoadDispatch& dispatch, bool& shortfall) {
    if (!(band[0] < band[1])) throw std::invalid_argument("temperature band must be ordered");
    shortfall = false;
    const double t = state.t_in_c;
    const double q_solar = config.solar_gain_kw(weather.ghi_wm2);
    const double q_conv = config.envelope_ua_kw_per_c * (t - weather.temp_c);
    const double vent_coeff = vent_kw_per_ach_per_c(config);
    double ach = config.infiltration_ach;
    double q_vent = vent_coeff * ach * (t - weather.temp_c);

    const double per_kw = 3600.0 * dt_hours / config.c_air_kj_per_c;  // degC per kW
    double t_free = t + per_kw * (q_solar - q_conv - q_vent);

    double q_heater = 0.0, q_chiller = 0.0;
    const auto& heaters = config.group(LoadClass::Heater);
    const auto& chillers = config.group(LoadClass::Chiller);
    const double heat_cap = heaters.count * heaters.rated_kw * config.heater_cop;
    const double cool_cap = chillers.count * chillers.rated_kw * config.chiller_cop;

    if (t_free < band[0]) {
        q_heater = std::min(heat_cap, (band[0] - t_free) / per_kw);
        if (q_heater >= heat_cap) shortfall = t_free + per_kw * q_heater < band[0] - 1e-9;
    } else if (t_free > band[1]) {
        // Free cooling first: raise the air-change rate while outside air helps.
        if (weather.temp_c < t - 0.1) {
            const double need_kw = (t_free - band[1]) / per_kw;
            const double extra =
                std::min(config.vent_rate_max_ach - ach,
                         need_kw / (vent_coeff * (t - weather.temp_c)));
            if (extra > 0) {
                ach += extra;
                q_vent = vent_coeff * ach * (t - weather.temp_c);
                t_free = t + per_kw * (q_solar - q_conv - q_vent);
            }
        }
        if (t_free > band[1]) {
            q_chiller = std::min(cool_cap, (t_free - band[1]) / per_kw);
            shortfall = t_free - per_kw * q_chiller > band[1] + 1e-9;
        }
    }

    dispatch.q_solar_kw = q_solar;
    dispatch.q_conv_kw = q_conv;
    dispatch.q_vent_kw = q_vent;
    dispatch.q_heater_kw = q_heater;
    dispatch.q_chiller_kw = q_chiller;
    dispatch.ach = ach;
    set_uniform(dispatch.group(LoadClass::Heater), heat_cap > 0 ? q_heater / heat_cap : 0.0);
    set_uniform(dispatch.group(LoadClass::Chiller), cool_cap > 0 ? q_chiller / cool_cap : 0.0);

    return t + per_kw * (q_solar + q_heater - q_chiller - q_vent - q_conv);
}

double step_humidity(EnvironmentState& state, const WeatherRecord& weather,
                     const GreenhouseConfig& config, const double band[2], double dt_hours,
                     LoadDispatch& dispatch) {
    if (band[0] < 0 || band[1] > 100 || !(band[0] < band[1]))
        throw std::invalid_argument("humidity band must lie inside [0,100]");
    const double rh = state.rh_in_pct;
    const double mid = 0.5 * (band[0] + band[1]);

    // Exchange with outside air, expressed directly in %RH at the indoor
    // temperature via the vapor-pressure ratio.
    const double p_out = weather.rh_pct / 100.0 * saturation_pressure_kpa(weather.temp_c);
    const double rh_out_equiv =
        std::min(100.0, relative_humidity_pct(p_out, saturation_pressure_kpa(state.t_in_c)));
    const double g_vent = dispatch.ach * (rh - rh_out_equiv);

    auto& foggers = dispatch.group(LoadClass::Fogger);
    auto& dehums = dispatch.group(LoadClass::Dehumidifier);
    const double fog_cap = config.group(LoadClass::Fogger).count * config.fog_rate_pct_per_h;
    const double dehum_cap =
        config.group(LoadClass::Dehumidifier).count * config.dehum_rate_pct_per_h;

    if (rh < band[0]) state.fogger_on = true;
    if (rh >= mid) state.fogger_on = false;
    if (rh > band[1]) state.dehum_on = true;
    if (rh <= mid) state.dehum_on = false;

    double g_fog = 0.0, g_dehum = 0.0;
    const double rh_drift = rh - g_vent * dt_hours;
    if (state.fogger_on && fog_cap > 0) {
        const double w = std::clamp((mid - rh_drift) / (fog_cap * dt_hours), 0.0, 1.0);
        g_fog = w * fog_cap;
        set_uniform(foggers, w);
    } else {
        set_uniform(foggers, 0.0);
    }
    if (state.dehum_on && dehum_cap > 0) {
        const double w = std::clamp((rh_drift - mid) / (dehum_cap * dt_hours), 0.0, 1.0);
        g_dehum = -w * dehum_cap;
        set_uniform(dehums, w);
    } else {
        set_uniform(dehums, 0.0);
    }

    dispatch.g_fog = g_fog;
    dispatch.g_dehum = g_dehum;
    dispatch.g_vent = g_vent;
    return std::clamp(rh + dt_hours * (g_fog + g_dehum - g_vent), 0.0, 100.0);
}

double step_co2(const EnvironmentState& state, const GreenhouseConfig& config, double vent_ach,
                double dt_hours, LoadDispatch& dispatch) {
    const double co2 = state.co2_ppm;
    const double j_vent = vent_ach * (co2 - config.co2_ambient_ppm);
    const double cap =
        config.group(LoadClass::Co2Injector).count * config.co2_inj_ppm_per_h;
    double j_inj = 0.0;
    if (co2 < config.co2_setpoint_ppm && cap > 0) {
        j_inj = std::min(cap, config.co2_gain_per_h * (config.co2_setpoint_ppm - co2) +
                                  std::max(0.0, j_vent));
        j_inj = std::min(j_inj, cap);
    }
    set_uniform(dispatch.group(LoadClass::Co2Injector), cap > 0 ? j_inj / cap : 0.0);
    dispatch.j_inj = j_inj;
    dispatch.j_vent = j_vent;
    return std::max(0.0, co2 + dt_hours * (j_inj - j_vent));
}

double interval_energy(const LoadDispatch& dispatch, double interval_hours) {
    double kwh = 0.0;
    for (const auto& g : dispatch.groups) kwh += g.total_w() * g.rated_kw * interval_hours;
    return kwh;
}

double lighting_power_kw(double ppfd_artificial, const GreenhouseConfig& config) {
    if (ppfd_artificial < 0) throw std::invalid_argument("PPFD must be nonnegative");
    // umol/s over the area divided by umol/J gives W; scale to kW.
    return ppfd_artificial * config.area_m2 / (config.led_efficacy_umol_per_j * 1e3);
}

bool dispatch_lighting(double power_kw, LoadDispatch& dispatch) {
    auto& leds = dispatch.group(LoadClass::Led);
    const double capacity = static_cast<double>(leds.unit_w.size()) * leds.rated_kw;
    const bool ok = power_kw <= capacity + 1e-9;
    double remaining = std::min(power_kw, capacity);
    for (auto& w : leds.unit_w) {
        const double take = std::min(leds.rated_kw, remaining);
        w = leds.rated_kw > 0 ? take / leds.rated_kw : 0.0;
        remaining -= take;
    }
    return ok;
}

SimulationResult simulate(int horizon_hours, const std::vector<WeatherRecord>& weather,
                          const LightingCommand& lighting, const GreenhouseConfig& config,
                          EnvironmentState initial) {
    config.check_valid();
    if (static_cast<int>(weather.size()) < horizon_hours)
        throw DataError("weather series covers " + std::to_string(weather.size()) +
                        " h, horizon needs " + std::to_string(horizon_hours));

    SimulationResult result;
    EnvironmentState state = initial;
    if (state.hour == 0 && !weather.empty()) state.hour = weather.front().hour;
    const int sub = std::max(1, config.substeps_per_interval);
    const double dt = 1.0 / sub;

    for (int h = 0; h < horizon_hours; ++h) {
        const WeatherRecord& wx = weather[h];
        const double solar_ppfd = config.solar_ppfd_from_ghi(wx.ghi_wm2);
        const double ppfd_art = std::max(0.0, lighting(wx.hour, solar_ppfd));
        const bool day = ppfd_art > 0.0 || wx.ghi_wm2 > config.day_ghi_threshold_wm2;
        const double* band = day ? config.day_temp_band : config.night_temp_band;

        LoadDispatch hour_dispatch = LoadDispatch::for_config(config);
        const double led_power = lighting_power_kw(ppfd_art, config);
        if (!dispatch_lighting(led_power, hour_dispatch)) {
            ++result.lighting_shortfall_intervals;
            result.warnings.push_back("lighting demand exceeds LED capacity at " +
                                      format_iso8601_hour(wx.hour));
        }

        bool any_saturated = false;
        double fan_duty = 0.0;
        LoadDispatch sub_dispatch = LoadDispatch::for_config(config);
        // Accumulators for the averaged hourly dispatch.
        std::vector<double> heater_w, chiller_w, fog_w, dehum_w, inj_w;
        double q_heater = 0, q_chiller = 0, q_vent = 0, q_conv = 0;
        double g_fog = 0, g_dehum = 0, g_vent = 0, j_inj = 0, j_vent = 0, ach_mean = 0;

        for (int s = 0; s < sub; ++s) {
            bool saturated = false;
            const double t_next =
                step_thermal(state, wx, config, band, dt, sub_dispatch, saturated);
            const double rh_next = step_humidity(state, wx, config, config.rh_band, dt,
                                                 sub_dispatch);
            const double co2_next = step_co2(state, config, sub_dispatch.ach, dt, sub_dispatch);
            any_saturated = any_saturated || saturated;

            const bool vent_boost = sub_dispatch.ach > config.infiltration_ach + 1e-12;
            if (vent_boost || ppfd_art > 0.0) fan_duty += dt;

            q_heater += sub_dispatch.q_heater_kw * dt;
            q_chiller += sub_dispatch.q_chiller_kw * dt;
            q_vent += sub_dispatch.q_vent_kw * dt;
            q_conv += sub_dispatch.q_conv_kw * dt;
            g_fog += sub_dispatch.g_fog * dt;
            g_dehum += sub_dispatch.g_dehum * dt;
            g_vent += sub_dispatch.g_vent * dt;
            j_inj += sub_dispatch.j_inj * dt;
            j_vent += sub_dispatch.j_vent * dt;
            ach_mean += sub_dispatch.ach * dt;

            const auto acc = [&](LoadClass c, std::vector<double>& into) {
                const auto& g = sub_dispatch.group(c);
                if (into.empty()) into.assign(g.unit_w.size(), 0.0);
                for (std::size_t i = 0; i < g.unit_w.size(); ++i) into[i] += g.unit_w[i] * dt;
            };
            acc(LoadClass::Heater, heater_w);
            acc(LoadClass::Chiller, chiller_w);
            acc(LoadClass::Fogger, fog_w);
            acc(LoadClass::Dehumidifier, dehum_w);
            acc(LoadClass::Co2Injector, inj_w);

            state.t_in_c = t_next;
            state.rh_in_pct = rh_next;
            state.co2_ppm = co2_next;
        }
        state.hour = wx.hour + 1;

        hour_dispatch.group(LoadClass::Heater).unit_w = heater_w;
        hour_dispatch.group(LoadClass::Chiller).unit_w = chiller_w;
        hour_dispatch.group(LoadClass::Fogger).unit_w = fog_w;
        hour_dispatch.group(LoadClass::Dehumidifier).unit_w = dehum_w;
        hour_dispatch.group(LoadClass::Co2Injector).unit_w = inj_w;
        set_uniform(hour_dispatch.group(LoadClass::Fan), fan_duty);
        hour_dispatch.q_heater_kw = q_heater;
        hour_dispatch.q_chiller_kw = q_chiller;
        hour_dispatch.q_vent_kw = q_vent;
        hour_dispatch.q_conv_kw = q_conv;
        hour_dispatch.g_fog = g_fog;
        hour_dispatch.g_dehum = g_dehum;
        hour_dispatch.g_vent = g_vent;
        hour_dispatch.j_inj = j_inj;
        hour_dispatch.j_vent = j_vent;
        hour_dispatch.ach = ach_mean;

        // A saturated actuator only counts as a shortfall if the hour still
        // ends outside the band (band switches may saturate transiently).
        if (any_saturated &&
            (state.t_in_c < band[0] - 0.25 || state.t_in_c > band[1] + 0.25)) {
            ++result.thermal_shortfall_intervals;
            result.warnings.push_back("thermal capacity shortfall at " +
                                      format_iso8601_hour(wx.hour));
        }

        EnergyRow row;
        row.hour = wx.hour;
        const auto kwh_of = [&](LoadClass c) {
            const auto& g = hour_dispatch.group(c);
            return g.total_w() * g.rated_kw;
        };
        row.lighting_kwh = kwh_of(LoadClass::Led);
        row.heating_kwh = kwh_of(LoadClass::Heater);
        row.cooling_kwh = kwh_of(LoadClass::Chiller);
        row.humidity_kwh = kwh_of(LoadClass::Fogger) + kwh_of(LoadClass::Dehumidifier);
        row.co2_kwh = kwh_of(LoadClass::Co2Injector);
        row.fans_kwh = kwh_of(LoadClass::Fan);
        row.total_kwh = interval_energy(hour_dispatch, 1.0);
        result.rows.push_back(row);
        result.states.push_back(state);
    }
    return result;
}

std::vector<WeatherRecord> read_weather_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_ts = t.require_column("timestamp_iso8601");
    const int c_ghi = t.require_column("ghi_wm2");
    const int c_t = t.require_column("temp_c");
    const int c_dp = t.require_column("dew_point_c");
    const int c_ws = t.require_column("wind_speed_ms");
    const int c_sp = t.require_column("station_pressure_kpa");
    const int c_slp = t.require_column("sea_level_pressure_kpa");
    const int c_wd = t.require_column("wind_dir_deg");
    const int c_rh = t.require_column("rh_pct");

    std::vector<WeatherRecord> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.line_numbers[i];
        WeatherRecord w;
        try {
            w.hour = parse_iso8601_hour(row[c_ts]);
        } catch (const std::invalid_argument& e) {
            throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
        }
        w.ghi_wm2 = parse_double_field(row[c_ghi], path, line, "ghi_wm2");
        w.temp_c = parse_double_field(row[c_t], path, line, "temp_c");
        w.dew_point_c = parse_double_field(row[c_dp], path, line, "dew_point_c");
        w.wind_speed_ms = parse_double_field(row[c_ws], path, line, "wind_speed_ms");
        w.station_pressure_kpa = parse_double_field(row[c_sp], path, line, "station_pressure_kpa");
        w.sea_level_pressure_kpa =
            parse_double_field(row[c_slp], path, line, "sea_level_pressure_kpa");
        w.wind_dir_deg = parse_double_field(row[c_wd], path, line, "wind_dir_deg");
        w.rh_pct = parse_double_field(row[c_rh], path, line, "rh_pct");
        if (w.ghi_wm2 < 0 || w.rh_pct < 0 || w.rh_pct > 100)
            throw DataError(path + ":" + std::to_string(line) + ": value out of physical range");
        if (!out.empty() && w.hour != out.back().hour + 1)
            throw DataError(path + ":" + std::to_string(line) + ": weather rows must be "
                            "contiguous hourly");
        out.push_back(w);
    }
    if (out.empty()) throw DataError("weather CSV '" + path + "' has no data rows");
    return out;
}

void write_weather_csv(const std::vector<WeatherRecord>& series, const std::string& path) {
    CsvWriter w(path);
    w.write_row({"timestamp_iso8601", "ghi_wm2", "temp_c", "dew_point_c", "wind_speed_ms",
                 "station_pressure_kpa", "sea_level_pressure_kpa", "wind_dir_deg", "rh_pct"});
    for (const auto& r : series)
        w.write_row({format_iso8601_hour(r.hour), fmt_double(r.ghi_wm2, 1),
                     fmt_double(r.temp_c, 2), fmt_double(r.dew_point_c, 2),
                     fmt_double(r.wind_speed_ms, 2), fmt_double(r.station_pressure_kpa, 2),
                     fmt_double(r.sea_level_pressure_kpa, 2), fmt_double(r.wind_dir_deg, 1),
                     fmt_double(r.rh_pct, 1)});
}

void write_energy_csv(const std::vector<EnergyRow>& rows, const std::string& path) {
    CsvWriter w(path);
    w.write_row({"timestamp", "lighting_kwh", "heating_kwh", "cooling_kwh", "humidity_kwh",
                 "co2_kwh", "fans_kwh", "total_kwh"});
    for (const auto& r : rows)
        w.write_row({format_iso8601_hour(r.hour), fmt_double(r.lighting_kwh, 3),
                     fmt_double(r.heating_kwh, 3), fmt_double(r.cooling_kwh, 3),
                     fmt_double(r.humidity_kwh, 3), fmt_double(r.co2_kwh, 3),
                     fmt_double(r.fans_kwh, 3), fmt_double(r.total_kwh, 3)});
}

std::vector<EnergyRow> read_energy_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int c_ts = t.require_column("timestamp");
    const int c_li = t.require_column("lighting_kwh");
    const int c_he = t.require_column("heating_kwh");
    const int c_co = t.require_column("cooling_kwh");
    const int c_hu = t.require_column("humidity_kwh");
    const int c_c2 = t.require_column("co2_kwh");
    const int c_fa = t.require_column("fans_kwh");
    const int c_to = t.require_column("total_kwh");
    std::vector<EnergyRow> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.line_numbers[i];
        EnergyRow r;
        try {
            r.hour = parse_iso8601_hour(row[c_ts]);
        } catch (const std::invalid_argument& e) {
            throw DataError(path + ":" + std::to_string(line) + ": " + e.what());
        }
        r.lighting_kwh = parse_double_field(row[c_li], path, line, "lighting_kwh");
        r.heating_kwh = parse_double_field(row[c_he], path, line, "heating_kwh");
        r.cooling_kwh = parse_double_field(row[c_co], path, line, "cooling_kwh");
        r.humidity_kwh = parse_double_field(row[c_hu], path, line, "humidity_kwh");
        r.co2_kwh = parse_double_field(row[c_c2], path, line, "co2_kwh");
        r.fans_kwh = parse_double_field(row[c_fa], path, line, "fans_kwh");
        r.total_kwh = parse_double_field(row[c_to], path, line, "total_kwh");
        out.push_back(r);
    }
    return out;
}

}  // namespace ghem
