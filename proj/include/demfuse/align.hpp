#pragma once

// Co-registration of two DEM grids: vertical bias and rigid point-to-point
// ICP over cell-centre point clouds.

#include "demfuse/grid.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace demfuse {

/// p -> rotation * p + translation, in map units (x east, y north, z up).
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    /// (this * other)(p) = this(other(p))
    RigidTransform operator*(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    RigidTransform inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }

    /// Rotation about the vertical axis through `pivot`, then a translation.
    static RigidTransform yaw_about(double yaw_deg, const Eigen::Vector3d& pivot, const Eigen::Vector3d& shift);
};

/// Rotation angle of a transform, degrees.
double rotation_angle_deg(const RigidTransform& t);

/// Closed-form least-squares rigid transform mapping `src` onto `dst`
/// (SVD of the cross-covariance, reflection-corrected). Columns are points.
RigidTransform estimate_rigid(const Eigen::Ref<const Eigen::Matrix3Xd>& src, const Eigen::Ref<const Eigen::Matrix3Xd>& dst);

/// median(fixed - moving) over doubly-valid pixels; adding it to `moving`
/// removes the vertical offset. Needs at least 100 such pixels.
double vertical_bias(const Grid& moving, const Grid& fixed);

struct IcpOptions {
    int max_iters = 50;
    double tol = 1e-4;                // stop when the RMSE improves by less (meters)
    std::size_t max_points = 50000;   // uniform-stride subsampling per cloud
    double rejection_factor = 3.0;    // drop pairs beyond this x median distance
    double z_scale = 10.0;            // height stretch in the nearest-neighbour metric
    int densify = 6;                  // fixed surface sampled densify^2 times per retained cell
};

struct IcpResult {
    RigidTransform transform;          // maps moving points onto fixed points
    double rmse = 0.0;                 // correspondence RMSE under `transform`
    std::vector<double> rmse_history;  // one entry per accepted state, non-increasing
    int iterations = 0;
    bool converged = false;            // tol reached before max_iters
};

/// Point-to-point ICP of the moving grid onto the fixed grid. Needs at least
/// 1000 valid cells in each; throws DivergenceError when the clouds do not
/// overlap.
IcpResult icp_register(const Grid& moving, const Grid& fixed, const IcpOptions& options = {},
                       const RigidTransform& initial = {});

/// Transform the cell-centre surface of `grid` and resample it onto
/// `target`. Target cells not covered by the transformed surface are nodata.
Grid apply_transform(const Grid& grid, const RigidTransform& t, const GridHeader& target);

/// 12 numbers: rotation rows, then translation; 17 significant digits.
void write_transform(std::ostream& out, const RigidTransform& t);
RigidTransform read_transform(std::istream& in);
void write_transform_file(const std::string& path, const RigidTransform& t);
RigidTransform read_transform_file(const std::string& path);

}  // namespace demfuse
