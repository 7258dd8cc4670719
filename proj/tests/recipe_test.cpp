#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ghem/recipe.hpp"

using namespace ghem;

namespace {

PhysiologyBounds lettuce_bounds() {
    PhysiologyBounds b;
    b.ppfd_min = 130.0;
    b.ppfd_max = 880.0;
    b.dli_target = 12.96;
    return b;
}

// Trial-recipe masks: R1 is the 12 h control block, R2/R3 spread their
// photoperiod with off gaps between one and seven hours.
const std::vector<int> kMaskR1 = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1,
                                  1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
const std::vector<int> kMaskR2 = {1, 1, 1, 0, 1, 1, 0, 0, 1, 1, 1, 0,
                                  0, 0, 1, 1, 1, 1, 0, 1, 1, 1, 0, 0};
const std::vector<int> kMaskR3 = {0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1,
                                  0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 1};

}  // namespace

TEST_CASE("dli of the 12 h / 348 PPFD baseline is 15.0336") {
    const auto baseline = LightingRecipe::constant(348.0, 6.0, 18.0);
    CHECK(dli(baseline) == doctest::Approx(15.0336).epsilon(1e-12));
}

TEST_CASE("dli zero cases and photoperiod inversion") {
    const auto dark = LightingRecipe::constant(0.0, 0.0, 0.0);
    CHECK(dli(dark) == 0.0);

    const auto r2 = LightingRecipe::from_mask(240.0, kMaskR2);
    REQUIRE(tdld(r2) == doctest::Approx(15.0));
    CHECK(dli(r2) == doctest::Approx(12.96).epsilon(1e-12));
}

TEST_CASE("tdld counts lit intervals") {
    CHECK(tdld(LightingRecipe::constant(348.0, 6.0, 18.0)) == doctest::Approx(12.0));
    CHECK(tdld(LightingRecipe::constant(0.0, 0.0, 0.0)) == doctest::Approx(0.0));
    CHECK(tdld(LightingRecipe::from_mask(400.0, kMaskR3)) == doctest::Approx(9.0));
}

TEST_CASE("value_at is piecewise constant with right-open intervals") {
    const auto baseline = LightingRecipe::constant(348.0, 6.0, 18.0);
    CHECK(value_at(baseline, 6.5) == doctest::Approx(348.0));
    CHECK(value_at(baseline, 3.0) == doctest::Approx(0.0));
    // Boundary t = nI belongs to interval n+1.
    CHECK(value_at(baseline, 6.0) == doctest::Approx(348.0));
    CHECK(value_at(baseline, 18.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(value_at(baseline, 24.0), std::out_of_range);
    CHECK_THROWS_AS(value_at(baseline, -0.1), std::out_of_range);
}

TEST_CASE("validate: R1 at 300 PPFD passes the lettuce bounds") {
    const auto r1 = LightingRecipe::from_mask(300.0, kMaskR1);
    CHECK(dli(r1) == doctest::Approx(12.96));
    CHECK(validate(r1, lettuce_bounds()).empty());
}

TEST_CASE("validate flags a lit sample under ppfd_min") {
    auto r1 = LightingRecipe::from_mask(300.0, kMaskR1);
    r1.values[7] = 100.0;
    r1.artificial[7] = 100.0;
    const auto violations = validate(r1, lettuce_bounds());
    REQUIRE(!violations.empty());
    bool found = false;
    for (const auto& v : violations)
        if (v.constraint == RecipeConstraint::PpfdRange && v.index == 7) found = true;
    CHECK(found);
}

TEST_CASE("validate flags the DLI of an all-dark recipe") {
    const auto dark = LightingRecipe::constant(0.0, 0.0, 0.0);
    const auto violations = validate(dark, lettuce_bounds());
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].constraint == RecipeConstraint::DliEquality);
}

TEST_CASE("run-length limits only checked when enabled") {
    auto bounds = lettuce_bounds();
    bounds.dli_target = dli(LightingRecipe::constant(200.0, 0.0, 20.0));
    const auto long_run = LightingRecipe::constant(200.0, 0.0, 20.0);
    CHECK(validate(long_run, bounds).empty());

    bounds.enforce_max_intervals = true;
    bounds.light_interval_max = 16.0;
    const auto violations = validate(long_run, bounds);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].constraint == RecipeConstraint::MaxLightRun);

    bounds.light_interval_max = 24.0;
    bounds.dark_interval_max = 3.0;
    const auto dark_viol = validate(long_run, bounds);
    REQUIRE(dark_viol.size() == 1);
    CHECK(dark_viol[0].constraint == RecipeConstraint::MaxDarkRun);
}

TEST_CASE("generate_trial_recipes inverts the DLI integral") {
    const auto results =
        generate_trial_recipes(lettuce_bounds(), {12.0, 15.0, 9.0}, {kMaskR1, kMaskR2, kMaskR3});
    REQUIRE(results.size() == 3);
    CHECK(results[0].required_ppfd == doctest::Approx(300.0));
    CHECK(results[1].required_ppfd == doctest::Approx(240.0));
    CHECK(results[2].required_ppfd == doctest::Approx(400.0));
    for (const auto& r : results) {
        REQUIRE(r.feasible);
        CHECK(validate(r.recipe, lettuce_bounds()).empty());
        CHECK(dli(r.recipe) == doctest::Approx(12.96).epsilon(1e-9));
    }
}

TEST_CASE("generate_trial_recipes: 24 h photoperiod gives 150 PPFD") {
    std::vector<int> all_on(24, 1);
    const auto results = generate_trial_recipes(lettuce_bounds(), {24.0}, {all_on});
    REQUIRE(results.size() == 1);
    CHECK(results[0].feasible);
    CHECK(results[0].required_ppfd == doctest::Approx(150.0));
}

TEST_CASE("generate_trial_recipes reports infeasible photoperiods per choice") {
    std::vector<int> two_on(24, 0);
    two_on[0] = two_on[1] = 1;
    const auto results = generate_trial_recipes(lettuce_bounds(), {2.0}, {two_on});
    REQUIRE(results.size() == 1);
    CHECK(!results[0].feasible);
    CHECK(results[0].required_ppfd == doctest::Approx(1800.0));
}

TEST_CASE("property: dli is linear in the recipe") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ppfd(0.0, 900.0);
    std::uniform_real_distribution<double> scale(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        LightingRecipe r;
        r.values.resize(24);
        r.artificial.resize(24);
        r.solar.assign(24, 0.0);
        for (int i = 0; i < 24; ++i) r.values[i] = r.artificial[i] = ppfd(rng);
        const double a = scale(rng);
        LightingRecipe scaled = r;
        for (int i = 0; i < 24; ++i) {
            scaled.values[i] *= a;
            scaled.artificial[i] *= a;
        }
        CHECK(dli(scaled) == doctest::Approx(a * dli(r)).epsilon(1e-12));
    }
}

TEST_CASE("property: widening the PPFD range never adds violations") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ppfd(0.0, 1000.0);
    for (int trial = 0; trial < 50; ++trial) {
        LightingRecipe r;
        r.values.resize(24);
        r.artificial.resize(24);
        r.solar.assign(24, 0.0);
        for (int i = 0; i < 24; ++i) r.values[i] = r.artificial[i] = ppfd(rng);

        PhysiologyBounds tight = lettuce_bounds();
        tight.dli_target = dli(r) > 0 ? dli(r) : 1.0;
        PhysiologyBounds wide = tight;
        wide.ppfd_min = tight.ppfd_min * 0.5;
        wide.ppfd_max = tight.ppfd_max * 1.5;
        CHECK(validate(r, wide).size() <= validate(r, tight).size());
    }
}

TEST_CASE("property: generated recipes hit the DLI target to 1e-9 relative") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> dli_pick(8.0, 20.0);
    std::uniform_int_distribution<int> hours_pick(8, 24);
    for (int trial = 0; trial < 50; ++trial) {
        PhysiologyBounds b = lettuce_bounds();
        b.dli_target = dli_pick(rng);
        const int hours = hours_pick(rng);
        std::vector<int> mask(24, 0);
        for (int i = 0; i < hours; ++i) mask[i] = 1;
        const auto results = generate_trial_recipes(b, {static_cast<double>(hours)}, {mask});
        REQUIRE(results.size() == 1);
        if (!results[0].feasible) continue;
        CHECK(dli(results[0].recipe) ==
              doctest::Approx(b.dli_target).epsilon(1e-9));
        CHECK(tdld(results[0].recipe) == doctest::Approx(hours));
        CHECK(dli(results[0].recipe) <=
              3.6e-3 * b.ppfd_max * 24.0 + 1e-9);
    }
}

TEST_CASE("recipe CSV round-trip") {
    const auto r2 = LightingRecipe::from_mask(240.0, kMaskR2);
    const std::string path = "recipe_roundtrip_test.csv";
    write_recipe_csv(r2, path);
    const auto back = read_recipe_csv(path);
    REQUIRE(back.intervals() == r2.intervals());
    for (int i = 0; i < 24; ++i) {
        CHECK(back.values[i] == doctest::Approx(r2.values[i]));
        CHECK(back.artificial[i] == doctest::Approx(r2.artificial[i]));
    }
    std::remove(path.c_str());
}

TEST_CASE("malformed recipes are rejected") {
    LightingRecipe bad;
    bad.values = {100.0, 50.0};
    bad.artificial = {100.0, 50.0};
    bad.solar = {0.0, 0.0};
    bad.interval_hours = 1.0;  // 2 intervals * 1 h != 24 h
    CHECK_THROWS_AS(dli(bad), std::invalid_argument);

    LightingRecipe split;
    split.interval_hours = 1.0;
    split.values.assign(24, 10.0);
    split.artificial.assign(24, 4.0);
    split.solar.assign(24, 4.0);  // 4 + 4 != 10
    CHECK_THROWS_AS(tdld(split), std::invalid_argument);
}
