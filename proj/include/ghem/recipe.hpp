#pragma once

#include <string>
#include <vector>

namespace ghem {

// A 24-hour piecewise-constant lighting schedule. `values` is the total PPFD
// per interval [umol m^-2 s^-1], split into an artificial and a solar
// component (values[n] == artificial[n] + solar[n]).
struct LightingRecipe {
    double interval_hours = 1.0;     // I
    std::vector<double> values;      // r[n], length N_I
    std::vector<double> artificial;  // r_a[n]
    std::vector<double> solar;       // r_s[n]

    int intervals() const { return static_cast<int>(values.size()); }

    // Constant-PPFD artificial recipe lit on [on_start_hour, on_end_hour).
    static LightingRecipe constant(double ppfd, double on_start_hour, double on_end_hour,
                                   double interval_hours = 1.0);
    // Artificial recipe from an explicit on/off mask, constant PPFD on lit slots.
    static LightingRecipe from_mask(double ppfd, const std::vector<int>& on_mask,
                                    double interval_hours = 1.0);

    // Throws std::invalid_argument if the component split or sizes are inconsistent.
    void check_well_formed() const;
};

// Plant-physiology limits discovered experimentally (lettuce): PPFD range,
// curtailed daily light integral target, and light/dark run-length limits.
struct PhysiologyBounds {
    double ppfd_min = 130.0;          // umol m^-2 s^-1
    double ppfd_max = 880.0;          // umol m^-2 s^-1
    double dli_target = 12.96;        // mol m^-2 day^-1
    double light_interval_min = 1.0;  // h
    double light_interval_max = 24.0;
    double dark_interval_min = 1.0;
    double dark_interval_max = 18.0;
    // Run-length limits are validated only on request; they are usually
    // relevant for flowering species, not leafy greens.
    bool enforce_max_intervals = false;

    void check_valid() const;  // throws std::invalid_argument
};

enum class RecipeConstraint {
    PpfdRange,     // nonzero sample outside [ppfd_min, ppfd_max] or any sample > ppfd_max
    DliEquality,   // |DLI - dli_target| > eps
    MaxLightRun,   // consecutive lit intervals exceed light_interval_max
    MaxDarkRun,    // consecutive dark intervals exceed dark_interval_max
};

struct RecipeViolation {
    RecipeConstraint constraint;
    int index;  // offending interval (0-based); -1 for whole-recipe constraints
    double value;
    std::string message;
};

// A PPFD sample counts as "lit" above this threshold; robust to float noise.
inline constexpr double kLitThreshold = 1e-9;
// Tolerance on the DLI equality; far below horticultural significance.
inline constexpr double kDliTolerance = 1e-6;

// Daily light integral [mol m^-2 day^-1]: sum of 3600e-6 * r[n] * I.
double dli(const LightingRecipe& recipe);

// Total daily light duration [h]: I * (number of lit intervals).
double tdld(const LightingRecipe& recipe);

// Piecewise-constant lookup, right-open intervals: y(t) = r[floor(t/I)].
// Throws std::out_of_range unless 0 <= t < 24.
double value_at(const LightingRecipe& recipe, double t_hours);

// Checks PPFD range, DLI equality, and (if enabled) run-length limits.
// Violations are data, not errors; empty result means the recipe is valid.
std::vector<RecipeViolation> validate(const LightingRecipe& recipe,
                                      const PhysiologyBounds& bounds);

// Required constant PPFD for a given DLI target and photoperiod (inverts the
// DLI integral for a constant recipe).
double constant_ppfd_for_dli(double dli_target, double tdld_hours);

struct TrialRecipeResult {
    double tdld_hours;
    bool feasible;
    double required_ppfd;  // set even when infeasible, for the report
    LightingRecipe recipe;  // empty when infeasible
    std::string note;
};

// Builds constant-PPFD trial recipes at the target DLI for each requested
// photoperiod, using the matching on/off mask. Infeasible choices (required
// PPFD outside bounds) are reported per-choice, not thrown.
std::vector<TrialRecipeResult> generate_trial_recipes(
    const PhysiologyBounds& bounds, const std::vector<double>& tdld_choices,
    const std::vector<std::vector<int>>& patterns);

// Recipe CSV: hour_index, ppfd_total, ppfd_artificial, ppfd_solar.
void write_recipe_csv(const LightingRecipe& recipe, const std::string& path);
LightingRecipe read_recipe_csv(const std::string& path);

}  // namespace ghem
