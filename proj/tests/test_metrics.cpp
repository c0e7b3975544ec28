#include "demfuse/errors.hpp"
#include "demfuse/metrics.hpp"
#include "demfuse/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

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

Eigen::VectorXd gaussian(SplitMix64& rng, int n, double sigma) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = sigma * rng.normal();
    return v;
}

}  // namespace

TEST_CASE("scalar metrics by hand") {
    CHECK(rmse(Eigen::Vector2d(3, 4)) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
    CHECK(median(Eigen::Vector4d(4, 1, 3, 2)) == 2.5);
    CHECK(quantile(Eigen::Vector4d(1, 2, 3, 4), 0.25) == doctest::Approx(1.75));

    Eigen::VectorXd e(5);
    e << 1, 2, 3, 4, 100;
    CHECK(nmad(e) == doctest::Approx(1.4826).epsilon(1e-14));

    CHECK(pearson_correlation(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(2, 4, 6)) == doctest::Approx(1.0));
    CHECK(pearson_correlation(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(3, 2, 1)) == doctest::Approx(-1.0));

    CHECK_THROWS_AS(rmse(Eigen::VectorXd(0)), InsufficientDataError);
    CHECK_THROWS_AS(nmad(Eigen::VectorXd(0)), InsufficientDataError);
    CHECK_THROWS_AS(pearson_correlation(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 2)), InsufficientDataError);
    CHECK_THROWS_AS(pearson_correlation(Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(3)), UsageError);
}

TEST_CASE("metrics agree with the oracle") {
    SplitMix64 rng(1);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + static_cast<int>(rng.below(200));
        std::vector<double> v(static_cast<std::size_t>(n));
        for (double& x : v) x = rng.uniform(-10, 10) * (rng.uniform() < 0.1 ? 30 : 1);
        const Eigen::Map<const Eigen::VectorXd> m(v.data(), n);
        CHECK(median(m) == doctest::Approx(oracle::quantile(v, 0.5)).epsilon(1e-13));
        CHECK(nmad(m) == doctest::Approx(oracle::nmad(v)).epsilon(1e-13));
        const double p = rng.uniform();
        CHECK(quantile(m, p) == doctest::Approx(oracle::quantile(v, p)).epsilon(1e-13));
    }
}

TEST_CASE("statistical behaviour") {
    SplitMix64 rng(2);
    const Eigen::VectorXd g = gaussian(rng, 20000, 2.0);

    SUBCASE("Gaussian residuals: RMSE and NMAD agree") {
        CHECK(rmse(g) == doctest::Approx(2.0).epsilon(0.02));
        CHECK(nmad(g) == doctest::Approx(2.0).epsilon(0.03));
    }
    SUBCASE("NMAD resists outliers, RMSE does not") {
        Eigen::VectorXd dirty = g;
        for (Eigen::Index i = 0; i < dirty.size(); i += 20) dirty(i) = 500.0;
        CHECK(nmad(dirty) < 1.2 * nmad(g));
        CHECK(rmse(dirty) > 10 * rmse(g));
    }
    SUBCASE("NMAD ignores a shift") {
        const Eigen::VectorXd shifted = (g.array() + 17.0).matrix();
        CHECK(nmad(shifted) == doctest::Approx(nmad(g)).epsilon(1e-12));
        CHECK(rmse(shifted) > rmse(g));
    }
    SUBCASE("independent samples are uncorrelated") {
        CHECK(std::abs(pearson_correlation(g, gaussian(rng, 20000, 1.0))) < 0.05);
    }
    SUBCASE("works on array expressions and blocks") {
        Eigen::ArrayXXd a(4, 5);
        a.setConstant(1.0);
        a(2, 3) = 9.0;
        CHECK(rmse(a) == doctest::Approx(std::sqrt((19 + 81) / 20.0)));
        CHECK(median(a.block(1, 1, 2, 3)) == 1.0);
    }
}

TEST_CASE("pixels improved") {
    const Grid truth = row({0, 0, 0, 0});
    const Grid base = row({1, 1, 1, 1});
    Grid fused = row({0.5, 2, 1, 0});
    CHECK(pct_pixels_improved(fused, base, truth) == 50.0);
    fused.set_nodata(0, 0);
    CHECK(pct_pixels_improved(fused, base, truth) == doctest::Approx(100.0 / 3.0));
    CHECK_THROWS_AS(pct_pixels_improved(row({0}), row({0, 1}), row({0})), GeometryError);
}

TEST_CASE("accuracy report") {
    Grid dem = row({3, -4, 1, 2});
    const Grid truth = row({0, 0, 1, 3});
    dem.set_nodata(0, 2);
    const AccuracyReport r = accuracy_report(dem, truth);
    CHECK(r.sample_count == 3);
    CHECK(r.rmse == doctest::Approx(std::sqrt((9 + 16 + 1) / 3.0)));
    CHECK_FALSE(r.pct_improved.has_value());

    const Grid base = row({5, 5, 5, 3});  // exact at the last pixel
    const AccuracyReport withbase = accuracy_report(dem, truth, &base);
    REQUIRE(withbase.pct_improved.has_value());
    CHECK(*withbase.pct_improved == doctest::Approx(200.0 / 3.0));

    const std::string kv = to_key_value(withbase);
    CHECK(kv.rfind("rmse=", 0) == 0);
    CHECK(kv.find("\nsample_count=3\n") != std::string::npos);
    CHECK(kv.find("pct_improved=") != std::string::npos);

    CHECK(valid_residuals(dem, truth).size() == 3);
}
