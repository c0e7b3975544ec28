#include "demfuse/align.hpp"
#include "demfuse/errors.hpp"
#include "demfuse/rng.hpp"
#include "demfuse/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace demfuse;

namespace {

Grid terrain(std::uint64_t seed, int size = 65) {
    TerrainSpec spec;
    spec.size = size;
    return generate_terrain(spec, seed);
}

double max_abs_diff(const Grid& a, const Grid& b) {
    double worst = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.valid(i) && b.valid(i)) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

}  // namespace

TEST_CASE("closed-form rigid estimate") {
    SplitMix64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
        RigidTransform truth;
        truth.rotation = Eigen::AngleAxisd(rng.uniform(-3, 3), axis).toRotationMatrix();
        truth.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()) * 10;
        Eigen::Matrix3Xd src(3, 30), dst(3, 30);
        for (int i = 0; i < 30; ++i) {
            src.col(i) = Eigen::Vector3d(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 20));
            dst.col(i) = truth.apply(src.col(i));
        }
        const RigidTransform est = estimate_rigid(src, dst);
        CHECK((est.rotation - truth.rotation).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((est.translation - truth.translation).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(est.rotation.determinant() == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(estimate_rigid(Eigen::Matrix3Xd(3, 2), Eigen::Matrix3Xd(3, 2)), InsufficientDataError);
}

TEST_CASE("transform algebra") {
    const RigidTransform t = RigidTransform::yaw_about(30.0, {10, 20, 0}, {1, 2, 3});
    const Eigen::Vector3d p(4, -5, 6);
    CHECK((t.inverse().apply(t.apply(p)) - p).norm() < 1e-12);
    CHECK(((t * t.inverse()).translation).norm() < 1e-12);
    CHECK(rotation_angle_deg(t) == doctest::Approx(30.0));
    // The pivot only moves by the shift.
    CHECK((t.apply({10, 20, 0}) - Eigen::Vector3d(11, 22, 3)).norm() < 1e-12);
}

TEST_CASE("vertical bias") {
    const Grid fixed = terrain(1);
    Grid moving = fixed;
    moving.values() += 3.0;
    CHECK(vertical_bias(moving, fixed) == doctest::Approx(-3.0));
    CHECK(vertical_bias(fixed, moving) == doctest::Approx(3.0));

    SUBCASE("robust to a tenth of gross outliers") {
        SplitMix64 rng(2);
        Grid noisy = moving;
        for (std::size_t i = 0; i < noisy.size(); i += 10) noisy[i] += rng.uniform(50, 100);
        CHECK(vertical_bias(noisy, fixed) == doctest::Approx(-3.0));
    }
    SUBCASE("needs overlap") {
        GridHeader h = fixed.header();
        h.nrows = h.ncols = 9;
        CHECK_THROWS_AS(vertical_bias(Grid(h, 1.0), Grid(h, 2.0)), InsufficientDataError);
    }
}

TEST_CASE("ICP") {
    const Grid fixed = terrain(5);

    SUBCASE("self-registration is the identity") {
        const IcpResult r = icp_register(fixed, fixed);
        CHECK((r.transform.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(r.transform.translation.norm() < 1e-6);
        CHECK(r.rmse < 1e-6);
    }
    SUBCASE("vertical offset is recovered") {
        Grid moving = fixed;
        moving.values() += 2.0;
        const IcpResult r = icp_register(moving, fixed);
        CHECK(r.transform.translation.z() == doctest::Approx(-2.0).epsilon(1e-3));
        CHECK(rotation_angle_deg(r.transform) < 0.01);
        for (std::size_t i = 1; i < r.rmse_history.size(); ++i) CHECK(r.rmse_history[i] <= r.rmse_history[i - 1]);
        CHECK(r.rmse == r.rmse_history.back());
    }
    SUBCASE("disjoint extents") {
        Grid far = fixed;
        GridHeader h = far.header();
        h.xll += 1e5;
        far = Grid(h, 0.0);
        far.values() = fixed.values();
        CHECK_THROWS_AS(icp_register(far, fixed), DivergenceError);
    }
    SUBCASE("too few cells") {
        const Grid small = terrain(5, 17);
        CHECK_THROWS_AS(icp_register(small, fixed), InsufficientDataError);
    }
    SUBCASE("option validation") {
        IcpOptions o;
        o.max_iters = 0;
        CHECK_THROWS_AS(icp_register(fixed, fixed, o), UsageError);
    }
}

TEST_CASE("apply transform") {
    const Grid g = terrain(6, 33);
    CHECK(max_abs_diff(apply_transform(g, {}, g.header()), g) < 1e-9);

    RigidTransform up;
    up.translation.z() = 2.0;
    const Grid raised = apply_transform(g, up, g.header());
    Grid want = g;
    want.values() += 2.0;
    CHECK(max_abs_diff(raised, want) < 1e-9);

    // A whole-cell shift east leaves the western column uncovered.
    RigidTransform east;
    east.translation.x() = g.header().cellsize;
    const Grid shifted = apply_transform(g, east, g.header());
    CHECK_FALSE(shifted.valid(10, 0));
    CHECK(shifted(10, 5) == doctest::Approx(g(10, 4)));
}

TEST_CASE("transform files") {
    const RigidTransform t = RigidTransform::yaw_about(12.345, {100, 200, 5}, {0.1, -0.2, 0.3});
    std::stringstream buf;
    write_transform(buf, t);
    const RigidTransform back = read_transform(buf);
    CHECK(back.rotation == t.rotation);
    CHECK(back.translation == t.translation);

    std::istringstream short_file("1 0 0 0 1 0 0 0 1 0 0");
    CHECK_THROWS_AS(read_transform(short_file), StructuralError);
    std::istringstream bad_number("1 0 0 0 1 0 0 0 x 0 0 0");
    CHECK_THROWS_AS(read_transform(bad_number), ParseError);
    std::istringstream skewed("2 0 0 0 1 0 0 0 1 0 0 0");
    CHECK_THROWS_AS(read_transform(skewed), StructuralError);
}
