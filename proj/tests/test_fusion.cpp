#include "demfuse/errors.hpp"
#include "demfuse/fusion.hpp"
#include "demfuse/rng.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace demfuse;

namespace {

Grid row(std::initializer_list<double> v) {
    GridHeader h;
    h.nrows = 1;
    h.ncols = static_cast<int>(v.size());
    Grid g(h, 0.0);
    std::size_t i = 0;
    for (double x : v) g[i++] = x;
    return g;
}

Grid filled(const Grid& like, double v) { return Grid(like.header(), v); }

}  // namespace

TEST_CASE("inverse-square weights") {
    const Grid w = weights_inverse_square(row({2.0, 0.0, 0.5}), 0.1);
    CHECK(w[0] == 0.25);
    CHECK(w[1] == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(w[2] == 4.0);
    CHECK(weights_inverse_square(row({0.0}))[0] == doctest::Approx(400.0));
    CHECK_THROWS_AS(weights_inverse_square(row({1.0}), 0.0), UsageError);

    Grid holed = row({1.0, 2.0});
    holed.set_nodata(0, 1);
    CHECK_FALSE(weights_inverse_square(holed).valid(0, 1));
}

TEST_CASE("one-minus-norm weights") {
    const Grid w = weights_one_minus_norm(row({0.0, 5.0, 10.0}));
    CHECK(w[0] == 1.0);
    CHECK(w[1] == 0.5);
    CHECK(w[2] == 0.0);
    CHECK(has_error_spread(row({0.0, 5.0})));
    CHECK_FALSE(has_error_spread(row({3.0, 3.0})));
    CHECK(weights_one_minus_norm(row({3.0, 3.0}))[1] == 1.0);
}

TEST_CASE("scheme names") {
    CHECK(parse_weight_scheme("Inverse-Square") == WeightScheme::InverseSquare);
    CHECK(parse_weight_scheme(weight_scheme_name(WeightScheme::OneMinusNorm)) == WeightScheme::OneMinusNorm);
    CHECK_THROWS_AS(parse_weight_scheme("softmax"), UsageError);
}

TEST_CASE("pair normalisation") {
    const WeightPair w = normalize_pair(row({1.0, 0.0}), row({3.0, 0.0}));
    CHECK(w.w_a[0] == 0.25);
    CHECK(w.w_b[0] == 0.75);
    CHECK(w.w_a[1] == 0.5);
    CHECK(w.w_b[1] == 0.5);

    Grid a = row({1.0, 1.0, 1.0}), b = row({2.0, 2.0, 2.0});
    a.set_nodata(0, 0);
    b.set_nodata(0, 0);
    b.set_nodata(0, 1);
    const WeightPair one_sided = normalize_pair(a, b);
    CHECK_FALSE(one_sided.w_a.valid(0, 0));
    CHECK(one_sided.w_a[1] == 1.0);
    CHECK(one_sided.w_b[1] == 0.0);
    CHECK_THROWS_AS(normalize_pair(row({-1.0}), row({1.0})), UsageError);
    CHECK_THROWS_AS(normalize_pair(row({1.0}), row({1.0, 2.0})), GeometryError);
}

TEST_CASE("weighted fusion") {
    const Grid da = row({10.0}), db = row({20.0});
    CHECK(fuse_weighted(da, db, {row({0.25}), row({0.75})})[0] == 17.5);
    CHECK(fuse_plain_average(da, db)[0] == 15.0);

    SUBCASE("an error twice as large gets a quarter of the weight") {
        const Grid f = fuse_with_error_maps(da, db, row({2.0}), row({1.0}), WeightScheme::InverseSquare);
        CHECK(f[0] == doctest::Approx(0.2 * 10.0 + 0.8 * 20.0).epsilon(1e-14));
    }
    SUBCASE("HEM baseline is the same composition") {
        CHECK(fuse_hem_baseline(da, db, row({2.0}), row({1.0}), WeightScheme::InverseSquare)[0] ==
              fuse_with_error_maps(da, db, row({2.0}), row({1.0}), WeightScheme::InverseSquare)[0]);
    }
    SUBCASE("validity rules") {
        Grid a = row({1.0, 1.0, 1.0, 1.0}), b = row({3.0, 3.0, 3.0, 3.0});
        a.set_nodata(0, 0);
        b.set_nodata(0, 1);
        a.set_nodata(0, 2);
        b.set_nodata(0, 2);
        Grid wa = row({0.9, 0.9, 0.9, 0.9}), wb = row({0.1, 0.1, 0.1, 0.1});
        wa.set_nodata(0, 3);
        const Grid f = fuse_weighted(a, b, {wa, wb});
        CHECK(f[0] == 3.0);
        CHECK(f[1] == 1.0);
        CHECK_FALSE(f.valid(0, 2));
        CHECK(f[3] == 2.0);  // weights missing: plain average
    }
}

TEST_CASE("mask substitution") {
    const Grid a = row({1.0, 1.0, 1.0}), b = row({2.0, 2.0, 2.0});
    Grid mask = row({0.0, 1.0, 0.0});
    mask.set_nodata(0, 2);
    const Grid s = substitute_by_mask(a, b, mask);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 2.0);
    CHECK(s[2] == 1.0);
    CHECK_THROWS_AS(substitute_by_mask(a, b, row({0.0, 0.5, 1.0})), UsageError);
}

TEST_CASE("fusion properties on random inputs") {
    SplitMix64 rng(17);
    for (int t = 0; t < 50; ++t) {
        const Grid da = testsupport::random_grid(rng, 6, 7, 0, 100), db = testsupport::random_grid(rng, 6, 7, 0, 100);
        const Grid ea = testsupport::random_grid(rng, 6, 7, 0, 5), eb = testsupport::random_grid(rng, 6, 7, 0, 5);
        for (auto scheme : {WeightScheme::InverseSquare, WeightScheme::OneMinusNorm}) {
            const Grid f = fuse_with_error_maps(da, db, ea, eb, scheme);
            const Grid swapped = fuse_with_error_maps(db, da, eb, ea, scheme);
            for (std::size_t i = 0; i < f.size(); ++i) {
                // Convex combination, symmetric in the two inputs.
                CHECK(f[i] >= std::min(da[i], db[i]) - 1e-9);
                CHECK(f[i] <= std::max(da[i], db[i]) + 1e-9);
                CHECK(f[i] == doctest::Approx(swapped[i]).epsilon(1e-12));
            }
        }

        // Scaling both error maps leaves inverse-square weights unchanged (above the floor).
        Grid ea_big = ea, eb_big = eb;
        ea_big.values() = ea.values() * 3.0 + 1.0;
        eb_big.values() = eb.values() * 3.0 + 1.0;
        Grid ea_bigger = ea_big, eb_bigger = eb_big;
        ea_bigger.values() *= 7.0;
        eb_bigger.values() *= 7.0;
        const Grid f1 = fuse_with_error_maps(da, db, ea_big, eb_big, WeightScheme::InverseSquare);
        const Grid f2 = fuse_with_error_maps(da, db, ea_bigger, eb_bigger, WeightScheme::InverseSquare);
        CHECK((f1.values() - f2.values()).abs().maxCoeff() < 1e-9);

        // Raising one map's error moves the result towards the other DEM.
        Grid ea_worse = ea_big;
        ea_worse.values() *= 2.0;
        const Grid f3 = fuse_with_error_maps(da, db, ea_worse, eb_big, WeightScheme::InverseSquare);
        for (std::size_t i = 0; i < f1.size(); ++i) CHECK(std::abs(f3[i] - db[i]) <= std::abs(f1[i] - db[i]) + 1e-9);
    }

    // Equal error maps reduce to the plain average.
    const Grid da = testsupport::random_grid(rng, 5, 5, 0, 10), db = testsupport::random_grid(rng, 5, 5, 0, 10);
    const Grid same = fuse_with_error_maps(da, db, filled(da, 1.3), filled(da, 1.3), WeightScheme::InverseSquare);
    CHECK((same.values() - fuse_plain_average(da, db).values()).abs().maxCoeff() < 1e-12);
}
