#pragma once

#include <cstdint>
#include <vector>

#include "ghem/simulator.hpp"
#include "ghem/tariff.hpp"

namespace ghem {

// Deterministic synthetic data for self-contained runs: a mid-latitude
// weather year (seasonal + diurnal temperature with AR(1) weather systems,
// clear-sky solar shaped by day length and multi-day cloud cover) and a
// matching wholesale market year (two-tier weekday pricing driven by a
// demand model, occasional spikes and negative overnight dips).
std::vector<WeatherRecord> generate_weather_year(int year, std::uint64_t seed);

PriceSeries generate_market_year(int year, std::uint64_t seed,
                                 const std::vector<WeatherRecord>& weather);

}  // namespace ghem
