#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ghem {

enum class LoadClass { Fan, Dehumidifier, Fogger, Led, Co2Injector, Chiller, Heater };

const char* load_class_name(LoadClass c);

struct DeviceGroup {
    LoadClass load_class;
    int count = 0;
    double rated_kw = 0.0;
};

struct GreenhouseConfig {
    double area_m2 = 10000.0;
    double height_m = 4.0;            // for the ventilation air volume
    double cover_transmittance = 0.6;
    double c_air_kj_per_c = 200000.0;  // lumped indoor heat capacity
    double day_temp_band[2] = {20.0, 24.0};
    double night_temp_band[2] = {12.0, 16.0};
    double rh_band[2] = {60.0, 70.0};
    double co2_setpoint_ppm = 820.0;
    double co2_ambient_ppm = 380.0;
    std::vector<DeviceGroup> devices;  // see default_devices()
    double led_efficacy_umol_per_j = 2.5;
    double solar_to_ppfd_umol_per_j = 2.02;  // applied after cover transmittance
    double envelope_ua_kw_per_c = 42.0;
    double vent_rate_max_ach = 5.0;
    double infiltration_ach = 0.2;
    double heater_cop = 0.95;
    double chiller_cop = 3.0;
    double fog_rate_pct_per_h = 1.0;    // %RH per hour per unit at full power
    double dehum_rate_pct_per_h = 1.0;
    double co2_inj_ppm_per_h = 200.0;   // per unit at full power
    double co2_gain_per_h = 5.0;        // proportional controller gain
    double day_ghi_threshold_wm2 = 5.0;
    int substeps_per_interval = 6;

    static std::vector<DeviceGroup> default_devices();
    const DeviceGroup& group(LoadClass c) const;
    void check_valid() const;

    // Post-transmittance solar PPFD available at the canopy [umol m^-2 s^-1].
    double solar_ppfd_from_ghi(double ghi_wm2) const;
    // Solar heat gain [kW].
    double solar_gain_kw(double ghi_wm2) const;
};

struct EnvironmentState {
    double t_in_c = 18.0;
    double rh_in_pct = 65.0;
    double co2_ppm = 820.0;
    std::int64_t hour = 0;
    // Hysteresis latches for the humidity controller.
    bool fogger_on = false;
    bool dehum_on = false;
};

struct WeatherRecord {
    std::int64_t hour = 0;
    double ghi_wm2 = 0.0;
    double temp_c = 0.0;
    double dew_point_c = 0.0;
    double wind_speed_ms = 0.0;
    double station_pressure_kpa = 101.3;
    double sea_level_pressure_kpa = 101.3;
    double wind_dir_deg = 0.0;
    double rh_pct = 70.0;
};

// Per-device scaling factors plus the physical flows behind them, for one
// interval (or sub-interval).
struct LoadDispatch {
    struct Group {
        LoadClass load_class;
        double rated_kw = 0.0;
        std::vector<double> unit_w;  // w^{l,n} in [0,1]
        double total_w() const;
    };
    std::vector<Group> groups;

    double q_solar_kw = 0.0;
    double q_heater_kw = 0.0;
    double q_chiller_kw = 0.0;   // thermal, positive when cooling
    double q_vent_kw = 0.0;      // positive when removing heat
    double q_conv_kw = 0.0;      // positive when losing heat
    double g_fog = 0.0;          // %RH/h
    double g_dehum = 0.0;        // %RH/h, <= 0
    double g_vent = 0.0;         // %RH/h removed by exchange
    double j_inj = 0.0;          // ppm/h
    double j_vent = 0.0;         // ppm/h
    double ach = 0.0;

    Group& group(LoadClass c);
    const Group& group(LoadClass c) const;
    static LoadDispatch for_config(const GreenhouseConfig& config);
};

// Magnus-form saturation vapor pressure [kPa] over water.
double saturation_pressure_kpa(double temp_c);
// Relative humidity from actual and saturation vapor pressure (Eq 2 form).
double relative_humidity_pct(double p_bar_kpa, double p_sat_kpa);
double rh_from_dew_point(double temp_c, double dew_point_c);

// One explicit-Euler update of the indoor temperature over dt_hours; the
// controller holds t_in inside `band` using ventilation first, then the
// heater/chiller, clipped to installed capacity. Returns the new t_in and
// fills the thermal entries of `dispatch`. `shortfall` is set when capacity
// saturates and the temperature leaves the band.
double step_thermal(const EnvironmentState& state, const WeatherRecord& weather,
                    const GreenhouseConfig& config, const double band[2], double dt_hours,
                    LoadDispatch& dispatch, bool& shortfall);

double step_humidity(EnvironmentState& state, const WeatherRecord& weather,
                     const GreenhouseConfig& config, const double band[2], double dt_hours,
                     LoadDispatch& dispatch);

double step_co2(const EnvironmentState& state, const GreenhouseConfig& config, double vent_ach,
                double dt_hours, LoadDispatch& dispatch);

// Eq 8: sum over classes and units of w * rated power * interval length [kWh].
double interval_energy(const LoadDispatch& dispatch, double interval_hours);

// Electrical power drawn by the LED fleet to produce `ppfd_artificial` over
// the growing area; linear in PPFD, zero at zero.
double lighting_power_kw(double ppfd_artificial, const GreenhouseConfig& config);

// Spreads a lighting power demand across the LED fleet (units fill to 1.0 in
// order). Returns false (and clips) when demand exceeds installed capacity.
bool dispatch_lighting(double power_kw, LoadDispatch& dispatch);

struct EnergyRow {
    std::int64_t hour = 0;
    double lighting_kwh = 0.0;
    double heating_kwh = 0.0;
    double cooling_kwh = 0.0;
    double humidity_kwh = 0.0;
    double co2_kwh = 0.0;
    double fans_kwh = 0.0;
    double total_kwh = 0.0;
};

struct SimulationResult {
    std::vector<EnergyRow> rows;
    std::vector<EnvironmentState> states;  // state after each interval
    int thermal_shortfall_intervals = 0;
    int lighting_shortfall_intervals = 0;
    std::vector<std::string> warnings;
};

// Artificial-lighting command for a given hour: maps (hour index, available
// solar PPFD) to the PPFD the lamps must produce.
using LightingCommand = std::function<double(std::int64_t hour, double solar_ppfd)>;

// Chains the climate steps and the load dispatch over `horizon_hours`
// 1-hour intervals. Deterministic for identical inputs. Throws DataError if
// the weather series does not cover the horizon.
SimulationResult simulate(int horizon_hours, const std::vector<WeatherRecord>& weather,
                          const LightingCommand& lighting, const GreenhouseConfig& config,
                          EnvironmentState initial = {});

std::vector<WeatherRecord> read_weather_csv(const std::string& path);
void write_weather_csv(const std::vector<WeatherRecord>& series, const std::string& path);
void write_energy_csv(const std::vector<EnergyRow>& rows, const std::string& path);
std::vector<EnergyRow> read_energy_csv(const std::string& path);

}  // namespace ghem
