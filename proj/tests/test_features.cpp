#include "demfuse/errors.hpp"
#include "demfuse/features.hpp"
#include "demfuse/rng.hpp"
#include "demfuse/synth.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace demfuse;

namespace {

GridHeader header(int rows, int cols, double cs = 5.0) {
    GridHeader h;
    h.nrows = rows;
    h.ncols = cols;
    h.cellsize = cs;
    return h;
}

double feature_of(FeatureKind kind, const Window& w, double cs) {
    const auto h = oracle::from_flat(w);
    switch (kind) {
        case FeatureKind::Slope: return oracle::slope(h, cs);
        case FeatureKind::Aspect: return oracle::aspect(h, cs);
        case FeatureKind::ACV: return oracle::acv(h);
        case FeatureKind::TRI: return oracle::tri(h);
        case FeatureKind::TPI: return oracle::tpi(h);
        case FeatureKind::Roughness: return oracle::roughness(h);
        case FeatureKind::Ruggedness: return oracle::ruggedness(h);
        case FeatureKind::SRF: return oracle::srf(h, cs);
        case FeatureKind::Entropy: return oracle::entropy(h);
        case FeatureKind::Edginess: return oracle::edginess(h);
        default: return std::nan("");
    }
}

}  // namespace

TEST_CASE("constant grid gives zero relief features") {
    const Grid g(header(6, 6), 12.5);
    for (auto kind : kComputedFeatures) {
        const Grid f = compute_feature(g, kind);
        const double want = kind == FeatureKind::SRF ? 1.0 : 0.0;
        for (int r = 1; r < 5; ++r)
            for (int c = 1; c < 5; ++c) CHECK(f(r, c) == want);
    }
}

TEST_CASE("tilted plane slope") {
    // One metre per cell eastwards at 5 m cells.
    Grid g(header(7, 7), 0.0);
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 7; ++c) g(r, c) = c;
    const Grid slope = compute_feature(g, FeatureKind::Slope);
    const Grid aspect = compute_feature(g, FeatureKind::Aspect);
    const Grid srf = compute_feature(g, FeatureKind::SRF);
    const double want = std::atan(1.0 / 5.0) * 180.0 / std::numbers::pi;
    CHECK(want == doctest::Approx(11.3099).epsilon(1e-5));
    for (int r = 1; r < 6; ++r)
        for (int c = 1; c < 6; ++c) {
            CHECK(slope(r, c) == doctest::Approx(want).epsilon(1e-12));
            // Rising to the east: steepest descent faces west.
            CHECK(aspect(r, c) == doctest::Approx(180.0));
            CHECK(srf(r, c) == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("hand-computed window 1..9") {
    const Window w = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(window_feature(w, 1.0, FeatureKind::TPI) == doctest::Approx(0.0));
    CHECK(window_feature(w, 1.0, FeatureKind::Roughness) == 4.0);
    CHECK(window_feature(w, 1.0, FeatureKind::Ruggedness) == 8.0);
    CHECK(window_feature(w, 1.0, FeatureKind::TRI) == doctest::Approx(std::sqrt(60.0 / 9.0)));
}

TEST_CASE("aux is not computable") {
    const Grid g(header(4, 4), 1.0);
    CHECK_THROWS_AS(compute_feature(g, FeatureKind::AuxErrorMap), UsageError);
}

TEST_CASE("brute-force equivalence on random windows") {
    SplitMix64 rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double cs = rng.uniform(1.0, 20.0);
        const Window w = testsupport::random_window(rng, rng.uniform(0.01, 30.0));
        for (auto kind : kComputedFeatures) CHECK(std::abs(window_feature(w, cs, kind) - feature_of(kind, w, cs)) <= 1e-9);
    }
}

TEST_CASE("feature ranges and ordering on random windows") {
    SplitMix64 rng(12);
    for (int i = 0; i < 2000; ++i) {
        const Window w = testsupport::random_window(rng, 10.0);
        const double cs = 5.0;
        CHECK(window_feature(w, cs, FeatureKind::TRI) >= 0.0);
        CHECK(window_feature(w, cs, FeatureKind::Roughness) >= 0.0);
        CHECK(window_feature(w, cs, FeatureKind::Entropy) >= 0.0);
        CHECK(window_feature(w, cs, FeatureKind::SRF) >= 1.0 - 1e-12);
        const double slope = window_feature(w, cs, FeatureKind::Slope);
        CHECK(slope >= 0.0);
        CHECK(slope < 90.0);
        const double aspect = window_feature(w, cs, FeatureKind::Aspect);
        CHECK(aspect >= 0.0);
        CHECK(aspect < 360.0);
        CHECK(window_feature(w, cs, FeatureKind::Ruggedness) >= window_feature(w, cs, FeatureKind::Roughness));
    }
}

TEST_CASE("height offset leaves features unchanged") {
    TerrainSpec spec;
    spec.size = 33;
    const Grid g = generate_terrain(spec, 4);
    Grid shifted = g;
    shifted.values() += 123.456;
    for (auto kind : kComputedFeatures) {
        if (kind == FeatureKind::Aspect) continue;
        const Grid a = compute_feature(g, kind), b = compute_feature(shifted, kind);
        double worst = 0;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a.valid(i)) worst = std::max(worst, std::abs(a[i] - b[i]));
        CHECK_MESSAGE(worst < 1e-9, feature_name(kind));
    }
}

TEST_CASE("feature table") {
    SUBCASE("border exclusion") {
        Grid g(header(4, 4), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(i % 5);
        const FeatureTable t = extract_feature_table(g, nullptr, {FeatureKind::Slope});
        CHECK(t.rows() == 4);
        CHECK(t.cols() == 1);
        CHECK(t.names == std::vector<std::string>{"slope"});
        CHECK(t.pixel_indices == std::vector<std::size_t>{5, 6, 9, 10});
    }
    SUBCASE("aux column passes values through") {
        SplitMix64 rng(5);
        const Grid g = testsupport::random_grid(rng, 6, 7, 0, 10);
        const Grid aux = testsupport::random_grid(rng, 6, 7, 0, 2);
        const FeatureTable t = extract_feature_table(g, &aux, {FeatureKind::TRI, FeatureKind::AuxErrorMap});
        const auto col = t.column("aux");
        REQUIRE(col.has_value());
        for (Eigen::Index r = 0; r < t.rows(); ++r) CHECK(t.values(r, *col) == aux[t.pixel_indices[static_cast<std::size_t>(r)]]);
    }
    SUBCASE("aux presence must match the request") {
        const Grid g(header(5, 5), 1.0);
        CHECK_THROWS_AS(extract_feature_table(g, nullptr, {FeatureKind::AuxErrorMap}), UsageError);
        CHECK_THROWS_AS(extract_feature_table(g, &g, {FeatureKind::Slope}), UsageError);
        const Grid wrong(header(5, 6), 1.0);
        CHECK_THROWS_AS(extract_feature_table(g, &wrong, {FeatureKind::AuxErrorMap}), GeometryError);
    }
    SUBCASE("interior nodata excludes every window touching it") {
        SplitMix64 rng(6);
        Grid g = testsupport::random_grid(rng, 9, 10, 0, 10);
        g.set_nodata(4, 5);
        const FeatureTable t = extract_feature_table(g, nullptr, testsupport::all_features());
        std::set<std::size_t> want;
        for (int r = 1; r < 8; ++r)
            for (int c = 1; c < 9; ++c) {
                bool clean = true;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc) clean = clean && g.valid(r + dr, c + dc);
                if (clean) want.insert(static_cast<std::size_t>(r * 10 + c));
            }
        CHECK(std::set<std::size_t>(t.pixel_indices.begin(), t.pixel_indices.end()) == want);
        CHECK(t.values.allFinite());
    }
}

TEST_CASE("feature list parsing") {
    CHECK(parse_feature_list("all").size() == 10);
    CHECK(parse_feature_list("Slope, tri").size() == 2);
    CHECK_THROWS_AS(parse_feature_list("slope,slope"), UsageError);
    CHECK_THROWS_AS(parse_feature_list("curvature"), UsageError);
    CHECK_THROWS_AS(parse_feature_list(""), UsageError);
    for (auto kind : kComputedFeatures) CHECK(parse_feature_kind(feature_name(kind)) == kind);
}

TEST_CASE("feature CSV") {
    Grid g(header(3, 3), 0.0);
    for (std::size_t i = 0; i < 9; ++i) g[i] = static_cast<double>(i + 1);
    const FeatureTable t = extract_feature_table(g, nullptr, {FeatureKind::Roughness, FeatureKind::Ruggedness});
    std::ostringstream out;
    write_feature_csv(out, t);
    CHECK(out.str() == "row,col,roughness,ruggedness\n1,1,4,8\n");
}
