#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "ghem/csv.hpp"
#include "ghem/simulator.hpp"
#include "ghem/timeutil.hpp"

using namespace ghem;

namespace {

GreenhouseConfig reference_config() {
    GreenhouseConfig c;
    c.devices = GreenhouseConfig::default_devices();
    return c;
}

WeatherRecord calm_weather(double t_out, double ghi = 0.0, double rh = 65.0) {
    WeatherRecord w;
    w.temp_c = t_out;
    w.ghi_wm2 = ghi;
    w.dew_point_c = t_out - 5.0;
    w.rh_pct = rh;
    return w;
}

std::vector<WeatherRecord> flat_day(double t_out, double ghi = 0.0, double rh = 65.0) {
    std::vector<WeatherRecord> wx;
    for (int h = 0; h < 24; ++h) {
        WeatherRecord w = calm_weather(t_out, ghi, rh);
        w.hour = h;
        wx.push_back(w);
    }
    return wx;
}

}  // namespace

TEST_CASE("thermal step: all heat flows zero leaves t_in unchanged") {
    GreenhouseConfig cfg = reference_config();
    cfg.envelope_ua_kw_per_c = 1e-12;  // isolate the state
    cfg.infiltration_ach = 0.0;
    EnvironmentState st;
    st.t_in_c = 22.0;
    const double band[2] = {20.0, 24.0};
    LoadDispatch d = LoadDispatch::for_config(cfg);
    bool shortfall = false;
    const double t = step_thermal(st, calm_weather(22.0), cfg, band, 1.0, d, shortfall);
    CHECK(t == doctest::Approx(22.0).epsilon(1e-12));
    CHECK(d.q_heater_kw == 0.0);
    CHECK(d.q_chiller_kw == 0.0);
    CHECK(!shortfall);
}

TEST_CASE("thermal step: a heater flow of c_air degC/h raises t_in by 1 degC") {
    // Drive the balance directly: with Q_heater = C_air/3600 kW and no other
    // flows, one hour integrates to exactly +1 degC.
    GreenhouseConfig cfg = reference_config();
    cfg.envelope_ua_kw_per_c = 1e-12;
    cfg.infiltration_ach = 0.0;
    EnvironmentState st;
    st.t_in_c = 10.0;  // far below band: controller wants max heat
    const double q_target = cfg.c_air_kj_per_c / 3600.0;  // kW for 1 degC/h
    // Size the fleet so capacity equals exactly that flow.
    for (auto& g : cfg.devices)
        if (g.load_class == LoadClass::Heater) {
            g.count = 1;
            g.rated_kw = q_target / cfg.heater_cop;
        }
    const double band[2] = {11.0, 24.0};  // t_free = 10 < 11 forces heating
    LoadDispatch d = LoadDispatch::for_config(cfg);
    bool shortfall = false;
    const double t = step_thermal(st, calm_weather(10.0), cfg, band, 1.0, d, shortfall);
    CHECK(d.q_heater_kw == doctest::Approx(q_target).epsilon(1e-9));
    CHECK(t == doctest::Approx(11.0).epsilon(1e-9));
}

TEST_CASE("thermal step: no drivers inside the band means no actuation") {
    GreenhouseConfig cfg = reference_config();
    EnvironmentState st;
    st.t_in_c = 22.0;
    const double band[2] = {20.0, 24.0};
    LoadDispatch d = LoadDispatch::for_config(cfg);
    bool shortfall = false;
    // t_out = t_in and no sun: conduction and ventilation vanish.
    const double t = step_thermal(st, calm_weather(22.0), cfg, band, 1.0, d, shortfall);
    CHECK(d.q_heater_kw == 0.0);
    CHECK(d.q_chiller_kw == 0.0);
    CHECK(t == doctest::Approx(22.0));
}

TEST_CASE("thermal step flags a capacity shortfall") {
    GreenhouseConfig cfg = reference_config();
    for (auto& g : cfg.devices)
        if (g.load_class == LoadClass::Heater) g.count = 1;  // 3.3 kW against -40 degC
    EnvironmentState st;
    st.t_in_c = 12.0;
    const double band[2] = {12.0, 16.0};
    LoadDispatch d = LoadDispatch::for_config(cfg);
    bool shortfall = false;
    step_thermal(st, calm_weather(-40.0), cfg, band, 1.0, d, shortfall);
    CHECK(shortfall);
}

TEST_CASE("humidity step: inside the band nothing actuates") {
    GreenhouseConfig cfg = reference_config();
    cfg.infiltration_ach = 0.0;
    EnvironmentState st;
    st.t_in_c = 22.0;
    st.rh_in_pct = 65.0;
    LoadDispatch d = LoadDispatch::for_config(cfg);
    d.ach = 0.0;
    const double rh = step_humidity(st, calm_weather(22.0), cfg, cfg.rh_band, 1.0, d);
    CHECK(rh == doctest::Approx(65.0));
    CHECK(d.g_fog == 0.0);
    CHECK(d.g_dehum == 0.0);
}

TEST_CASE("humidity step: above the band the dehumidifier pulls RH down") {
    GreenhouseConfig cfg = reference_config();
    EnvironmentState st;
    st.t_in_c = 22.0;
    st.rh_in_pct = 85.0;
    LoadDispatch d = LoadDispatch::for_config(cfg);
    d.ach = 0.0;
    const double rh = step_humidity(st, calm_weather(22.0, 0.0, 65.0), cfg, cfg.rh_band, 1.0, d);
    CHECK(d.g_dehum < 0.0);
    CHECK(rh < 85.0);
}

TEST_CASE("saturated air at the dew point reads 100% RH") {
    CHECK(rh_from_dew_point(18.0, 18.0) == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(rh_from_dew_point(25.0, 15.0) < 100.0);
    CHECK(relative_humidity_pct(saturation_pressure_kpa(20.0), saturation_pressure_kpa(20.0)) ==
          doctest::Approx(100.0));
}

TEST_CASE("co2 step: at the setpoint with no ventilation nothing moves") {
    GreenhouseConfig cfg = reference_config();
    EnvironmentState st;
    st.co2_ppm = cfg.co2_setpoint_ppm;
    LoadDispatch d = LoadDispatch::for_config(cfg);
    const double co2 = step_co2(st, cfg, 0.0, 1.0, d);
    CHECK(co2 == doctest::Approx(cfg.co2_setpoint_ppm));
    CHECK(d.j_inj == 0.0);
}

TEST_CASE("co2 step: injection integrates J_inj * dt") {
    GreenhouseConfig cfg = reference_config();
    EnvironmentState st;
    st.co2_ppm = cfg.co2_ambient_ppm;  // 380, far below the 820 setpoint
    LoadDispatch d = LoadDispatch::for_config(cfg);
    const double dt = 0.25;
    const double co2 = step_co2(st, cfg, 0.0, dt, d);
    CHECK(co2 == doctest::Approx(st.co2_ppm + d.j_inj * dt).epsilon(1e-12));
    CHECK(d.j_inj > 0.0);
}

TEST_CASE("co2 step: venting decays toward ambient") {
    GreenhouseConfig cfg = reference_config();
    for (auto& g : cfg.devices)
        if (g.load_class == LoadClass::Co2Injector) g.count = 0;  // injector off
    EnvironmentState st;
    st.co2_ppm = 800.0;
    LoadDispatch d = LoadDispatch::for_config(cfg);
    double co2 = st.co2_ppm;
    for (int k = 0; k < 10; ++k) {
        st.co2_ppm = co2;
        co2 = step_co2(st, cfg, 2.0, 0.1, d);
        CHECK(co2 < st.co2_ppm);
        CHECK(co2 > cfg.co2_ambient_ppm);
    }
}

TEST_CASE("interval energy sums w * rated * I across the inventory") {
    GreenhouseConfig cfg = reference_config();
    LoadDispatch d = LoadDispatch::for_config(cfg);

    // 2 LED units at w=1 for 1 h -> 1.2 kWh.
    d.group(LoadClass::Led).unit_w[0] = 1.0;
    d.group(LoadClass::Led).unit_w[1] = 1.0;
    CHECK(interval_energy(d, 1.0) == doctest::Approx(1.2));

    // Add 1 chiller at w=0.5 (6.6 kW) and an idle heater -> +3.3 kWh.
    d.group(LoadClass::Chiller).unit_w[0] = 0.5;
    CHECK(interval_energy(d, 1.0) == doctest::Approx(1.2 + 3.3));

    // All off.
    LoadDispatch idle = LoadDispatch::for_config(cfg);
    CHECK(interval_energy(idle, 1.0) == 0.0);
}

TEST_CASE("lighting power is linear and matches the efficacy example") {
    GreenhouseConfig cfg = reference_config();
    CHECK(lighting_power_kw(0.0, cfg) == 0.0);
    CHECK(lighting_power_kw(348.0, cfg) == doctest::Approx(1392.0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ppfd(0.0, 440.0);
    for (int t = 0; t < 20; ++t) {
        const double a = ppfd(rng), b = ppfd(rng);
        CHECK(lighting_power_kw(a + b, cfg) ==
              doctest::Approx(lighting_power_kw(a, cfg) + lighting_power_kw(b, cfg)));
    }
}

TEST_CASE("lighting dispatch spreads power across the fleet and flags overload") {
    GreenhouseConfig cfg = reference_config();
    LoadDispatch d = LoadDispatch::for_config(cfg);
    CHECK(dispatch_lighting(0.9, d));
    const auto& leds = d.group(LoadClass::Led);
    CHECK(leds.unit_w[0] == doctest::Approx(1.0));
    CHECK(leds.unit_w[1] == doctest::Approx(0.5));
    CHECK(leds.unit_w[2] == 0.0);
    CHECK(leds.total_w() * leds.rated_kw == doctest::Approx(0.9));

    const double capacity = leds.unit_w.size() * leds.rated_kw;
    LoadDispatch d2 = LoadDispatch::for_config(cfg);
    CHECK(!dispatch_lighting(capacity + 1.0, d2));
}

TEST_CASE("simulate: benign day needs only lighting and fans") {
    GreenhouseConfig cfg = reference_config();
    // One band around the clock, sealed envelope air exchange, outside air at
    // the band midpoint, no sun: no thermal, humidity, or CO2 actuation.
    cfg.night_temp_band[0] = cfg.day_temp_band[0];
    cfg.night_temp_band[1] = cfg.day_temp_band[1];
    cfg.infiltration_ach = 0.0;
    auto wx = flat_day(22.0, 0.0, 65.0);
    EnvironmentState init;
    init.t_in_c = 22.0;
    init.rh_in_pct = 65.0;
    init.co2_ppm = cfg.co2_setpoint_ppm;
    const LightingCommand baseline = [](std::int64_t h, double) {
        const int hod = static_cast<int>(h % 24);
        return hod >= 6 && hod < 18 ? 348.0 : 0.0;
    };
    const SimulationResult res = simulate(24, wx, baseline, cfg, init);
    REQUIRE(res.rows.size() == 24);
    double heating = 0, cooling = 0, humidity = 0, co2 = 0, lighting = 0;
    for (const auto& r : res.rows) {
        heating += r.heating_kwh;
        cooling += r.cooling_kwh;
        humidity += r.humidity_kwh;
        co2 += r.co2_kwh;
        lighting += r.lighting_kwh;
    }
    CHECK(heating == 0.0);
    CHECK(cooling == 0.0);
    CHECK(humidity == 0.0);
    CHECK(co2 == 0.0);
    CHECK(lighting == doctest::Approx(12 * 1392.0).epsilon(1e-9));
    for (const auto& r : res.rows)
        CHECK(r.total_kwh ==
              doctest::Approx(r.lighting_kwh + r.fans_kwh).epsilon(1e-12));
}

TEST_CASE("simulate: determinism and LED fleet repartition invariance") {
    GreenhouseConfig cfg = reference_config();
    auto wx = flat_day(10.0, 200.0, 60.0);
    const LightingCommand cmd = [](std::int64_t h, double solar) {
        const int hod = static_cast<int>(h % 24);
        return hod >= 6 && hod < 18 ? std::max(0.0, 348.0 - solar) : 0.0;
    };
    const SimulationResult a = simulate(24, wx, cmd, cfg);
    const SimulationResult b = simulate(24, wx, cmd, cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].total_kwh == b.rows[i].total_kwh);  // bit-identical
        CHECK(a.states[i].t_in_c == b.states[i].t_in_c);
    }

    GreenhouseConfig doubled = cfg;
    for (auto& g : doubled.devices)
        if (g.load_class == LoadClass::Led) g.count *= 2;
    const SimulationResult c = simulate(24, wx, cmd, doubled);
    for (std::size_t i = 0; i < a.rows.size(); ++i)
        CHECK(c.rows[i].lighting_kwh == doctest::Approx(a.rows[i].lighting_kwh).epsilon(1e-12));
}

TEST_CASE("simulate: controller holds the band on a varying day") {
    GreenhouseConfig cfg = reference_config();
    std::vector<WeatherRecord> wx;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> noise(-2.0, 2.0);
    for (int h = 0; h < 72; ++h) {
        WeatherRecord w;
        w.hour = h;
        const double hod = static_cast<double>(h % 24);
        w.temp_c = 8.0 + 6.0 * std::sin(2 * M_PI * (hod - 15.0) / 24.0) + noise(rng);
        w.ghi_wm2 = std::max(0.0, 500.0 * std::sin(M_PI * (hod - 6.0) / 12.0));
        if (hod < 6 || hod > 18) w.ghi_wm2 = 0.0;
        w.dew_point_c = w.temp_c - 4.0;
        w.rh_pct = 70.0;
        wx.push_back(w);
    }
    const LightingCommand cmd = [](std::int64_t h, double solar) {
        const int hod = static_cast<int>(h % 24);
        return hod >= 6 && hod < 18 ? std::max(0.0, 348.0 - solar) : 0.0;
    };
    EnvironmentState init;
    init.t_in_c = 22.0;
    const SimulationResult res = simulate(72, wx, cmd, cfg, init);
    CHECK(res.thermal_shortfall_intervals == 0);
    for (std::size_t i = 1; i < res.states.size(); ++i) {
        const auto& st = res.states[i];
        CHECK(st.t_in_c > 11.5);
        CHECK(st.t_in_c < 24.5);
        CHECK(st.rh_in_pct >= 0.0);
        CHECK(st.rh_in_pct <= 100.0);
    }
    for (const auto& r : res.rows) CHECK(r.total_kwh >= 0.0);
}

TEST_CASE("simulate requires weather coverage") {
    GreenhouseConfig cfg = reference_config();
    auto wx = flat_day(20.0);
    const LightingCommand off = [](std::int64_t, double) { return 0.0; };
    CHECK_THROWS_AS(simulate(48, wx, off, cfg), DataError);
}

TEST_CASE("weather CSV round-trip and validation") {
    auto wx = flat_day(15.0, 300.0, 70.0);
    for (std::size_t i = 0; i < wx.size(); ++i) wx[i].hour = hour_index({2024, 3, 1, 0}) + i;
    const std::string path = "simulator_test_weather.csv";
    write_weather_csv(wx, path);
    const auto back = read_weather_csv(path);
    REQUIRE(back.size() == wx.size());
    CHECK(back[3].temp_c == doctest::Approx(15.0));
    CHECK(back[3].ghi_wm2 == doctest::Approx(300.0));

    {
        std::ofstream f(path);
        f << "timestamp_iso8601,ghi_wm2,temp_c,dew_point_c,wind_speed_ms,"
             "station_pressure_kpa,sea_level_pressure_kpa,wind_dir_deg,rh_pct\n";
        f << "2024-03-01T00:00:00,0,5,2,1,101,101,90,70\n";
        f << "2024-03-01T02:00:00,0,5,2,1,101,101,90,70\n";  // hole
    }
    CHECK_THROWS_AS(read_weather_csv(path), DataError);
    std::remove(path.c_str());
}

TEST_CASE("energy CSV round-trip") {
    std::vector<EnergyRow> rows(3);
    for (int i = 0; i < 3; ++i) {
        rows[i].hour = hour_index({2024, 5, 1, i});
        rows[i].lighting_kwh = 100.0 + i;
        rows[i].total_kwh = 150.0 + i;
    }
    const std::string path = "simulator_test_energy.csv";
    write_energy_csv(rows, path);
    const auto back = read_energy_csv(path);
    REQUIRE(back.size() == 3);
    CHECK(back[1].lighting_kwh == doctest::Approx(101.0));
    CHECK(back[2].total_kwh == doctest::Approx(152.0));
    std::remove(path.c_str());
}
