#include "ghem/recipe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ghem/csv.hpp"

namespace ghem {

LightingRecipe LightingRecipe::constant(double ppfd, double on_start_hour, double on_end_hour,
                                        double interval_hours) {
    const int n = static_cast<int>(std::lround(24.0 / interval_hours));
    LightingRecipe r;
    r.interval_hours = interval_hours;
    r.values.assign(n, 0.0);
    r.artificial.assign(n, 0.0);
    r.solar.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        const double t = i * interval_hours;
        if (t >= on_start_hour && t < on_end_hour) {
            r.values[i] = ppfd;
            r.artificial[i] = ppfd;
        }
    }
    return r;
}

LightingRecipe LightingRecipe::from_mask(double ppfd, const std::vector<int>& on_mask,
                                         double interval_hours) {
    LightingRecipe r;
    r.interval_hours = interval_hours;
    const int n = static_cast<int>(on_mask.size());
    r.values.assign(n, 0.0);
    r.artificial.assign(n, 0.0);
    r.solar.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (on_mask[i]) {
            r.values[i] = ppfd;
            r.artificial[i] = ppfd;
        }
    }
    return r;
}

void LightingRecipe::check_well_formed() const {
    const std::size_t n = values.size();
    if (n == 0) throw std::invalid_argument("recipe has no intervals");
    if (artificial.size() != n || solar.size() != n)
        throw std::invalid_argument("recipe component arrays differ in length");
    if (interval_hours <= 0.0) throw std::invalid_argument("interval_hours must be positive");
    if (std::abs(static_cast<double>(n) * interval_hours - 24.0) > 1e-9)
        throw std::invalid_argument("recipe intervals must cover exactly 24 h");
    for (std::size_t i = 0; i < n; ++i) {
        if (values[i] < 0.0 || artificial[i] < 0.0 || solar[i] < 0.0)
            throw std::invalid_argument("negative PPFD sample at interval " + std::to_string(i));
        if (std::abs(values[i] - (artificial[i] + solar[i])) > 1e-9 * std::max(1.0, values[i]))
            throw std::invalid_argument("values != artificial + solar at interval " +
                                        std::to_string(i));
    }
}

void PhysiologyBounds::check_valid() const {
    if (!(ppfd_min > 0.0) || !(ppfd_min < ppfd_max))
        throw std::invalid_argument("require 0 < ppfd_min < ppfd_max");
    if (!(dli_target > 0.0)) throw std::invalid_argument("dli_target must be positive");
}

double dli(const LightingRecipe& recipe) {
    recipe.check_well_formed();
    double sum = 0.0;
    for (double r : recipe.values) sum += r;
    return 3600e-6 * sum * recipe.interval_hours;
}

double tdld(const LightingRecipe& recipe) {
    recipe.check_well_formed();
    int lit = 0;
    for (double r : recipe.values)
        if (r > kLitThreshold) ++lit;
    return lit * recipe.interval_hours;
}

double value_at(const LightingRecipe& recipe, double t_hours) {
    recipe.check_well_formed();
    if (!(t_hours >= 0.0) || !(t_hours < 24.0))
        throw std::out_of_range("recipe time must satisfy 0 <= t < 24");
    const int idx = static_cast<int>(t_hours / recipe.interval_hours);
    return recipe.values[std::min(idx, recipe.intervals() - 1)];
}

namespace {

void check_run_lengths(const LightingRecipe& recipe, const PhysiologyBounds& bounds,
                       std::vector<RecipeViolation>& out) {
    const int n = recipe.intervals();
    const double I = recipe.interval_hours;
    int run = 0;
    bool lit_run = recipe.values[0] > kLitThreshold;
    for (int i = 0; i <= n; ++i) {
        const bool lit = i < n && recipe.values[i] > kLitThreshold;
        if (i < n && lit == lit_run) {
            ++run;
            continue;
        }
        const double hours = run * I;
        if (lit_run && hours > bounds.light_interval_max + 1e-12)
            out.push_back({RecipeConstraint::MaxLightRun, i - 1, hours,
                           "lit run of " + fmt_double(hours, 2) + " h exceeds " +
                               fmt_double(bounds.light_interval_max, 2) + " h ending at interval " +
                               std::to_string(i - 1)});
        if (!lit_run && hours > bounds.dark_interval_max + 1e-12)
            out.push_back({RecipeConstraint::MaxDarkRun, i - 1, hours,
                           "dark run of " + fmt_double(hours, 2) + " h exceeds " +
                               fmt_double(bounds.dark_interval_max, 2) + " h ending at interval " +
                               std::to_string(i - 1)});
        lit_run = lit;
        run = 1;
    }
}

}  // namespace

std::vector<RecipeViolation> validate(const LightingRecipe& recipe,
                                      const PhysiologyBounds& bounds) {
    recipe.check_well_formed();
    bounds.check_valid();
    std::vector<RecipeViolation> out;

    for (int i = 0; i < recipe.intervals(); ++i) {
        const double r = recipe.values[i];
        if (r > bounds.ppfd_max + 1e-9)
            out.push_back({RecipeConstraint::PpfdRange, i, r,
                           "sample " + fmt_double(r, 3) + " above ppfd_max at interval " +
                               std::to_string(i)});
        else if (r > kLitThreshold && r < bounds.ppfd_min - 1e-9)
            out.push_back({RecipeConstraint::PpfdRange, i, r,
                           "lit sample " + fmt_double(r, 3) + " below ppfd_min at interval " +
                               std::to_string(i)});
    }

    const double d = dli(recipe);
    if (std::abs(d - bounds.dli_target) > kDliTolerance)
        out.push_back({RecipeConstraint::DliEquality, -1, d,
                       "DLI " + fmt_double(d, 6) + " != target " +
                           fmt_double(bounds.dli_target, 6)});

    if (bounds.enforce_max_intervals) check_run_lengths(recipe, bounds, out);
    return out;
}

double constant_ppfd_for_dli(double dli_target, double tdld_hours) {
    if (!(tdld_hours > 0.0)) throw std::invalid_argument("photoperiod must be positive");
    return dli_target * 1e6 / (3600.0 * tdld_hours);
}

std::vector<TrialRecipeResult> generate_trial_recipes(
    const PhysiologyBounds& bounds, const std::vector<double>& tdld_choices,
    const std::vector<std::vector<int>>& patterns) {
    bounds.check_valid();
    if (patterns.size() != tdld_choices.size())
        throw std::invalid_argument("one on/off pattern required per TDLD choice");

    std::vector<TrialRecipeResult> out;
    for (std::size_t k = 0; k < tdld_choices.size(); ++k) {
        TrialRecipeResult res;
        res.tdld_hours = tdld_choices[k];
        res.required_ppfd = constant_ppfd_for_dli(bounds.dli_target, tdld_choices[k]);

        int on_count = 0;
        for (int m : patterns[k]) on_count += m ? 1 : 0;
        const double interval = 24.0 / static_cast<double>(patterns[k].size());
        if (std::abs(on_count * interval - tdld_choices[k]) > 1e-9) {
            res.feasible = false;
            res.note = "pattern lit duration does not match requested TDLD";
            out.push_back(std::move(res));
            continue;
        }
        if (res.required_ppfd < bounds.ppfd_min - 1e-9 ||
            res.required_ppfd > bounds.ppfd_max + 1e-9) {
            res.feasible = false;
            res.note = "required PPFD " + fmt_double(res.required_ppfd, 3) +
                       " outside [" + fmt_double(bounds.ppfd_min, 1) + ", " +
                       fmt_double(bounds.ppfd_max, 1) + "]";
            out.push_back(std::move(res));
            continue;
        }
        res.feasible = true;
        res.recipe = LightingRecipe::from_mask(res.required_ppfd, patterns[k], interval);
        out.push_back(std::move(res));
    }
    return out;
}

void write_recipe_csv(const LightingRecipe& recipe, const std::string& path) {
    recipe.check_well_formed();
    CsvWriter w(path);
    w.write_row({"hour_index", "ppfd_total", "ppfd_artificial", "ppfd_solar"});
    for (int i = 0; i < recipe.intervals(); ++i)
        w.write_row({std::to_string(i), fmt_double(recipe.values[i]),
                     fmt_double(recipe.artificial[i]), fmt_double(recipe.solar[i])});
}

LightingRecipe read_recipe_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int ci = t.require_column("hour_index");
    const int cv = t.require_column("ppfd_total");
    const int ca = t.require_column("ppfd_artificial");
    const int cs = t.require_column("ppfd_solar");
    LightingRecipe r;
    const std::size_t n = t.rows.size();
    if (n == 0) throw DataError("recipe CSV '" + path + "' has no rows");
    r.interval_hours = 24.0 / static_cast<double>(n);
    r.values.resize(n);
    r.artificial.resize(n);
    r.solar.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.line_numbers[i];
        const auto idx = parse_int_field(row[ci], path, line, "hour_index");
        if (idx != static_cast<std::int64_t>(i))
            throw DataError(path + ":" + std::to_string(line) + ": hour_index out of order");
        r.values[i] = parse_double_field(row[cv], path, line, "ppfd_total");
        r.artificial[i] = parse_double_field(row[ca], path, line, "ppfd_artificial");
        r.solar[i] = parse_double_field(row[cs], path, line, "ppfd_solar");
    }
    r.check_well_formed();
    return r;
}

}  // namespace ghem
