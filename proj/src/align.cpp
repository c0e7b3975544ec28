#include "demfuse/align.hpp"

#include "demfuse/errors.hpp"
#include "demfuse/metrics.hpp"
#include "kdtree.hpp"
#include "text.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>

namespace demfuse {

RigidTransform RigidTransform::yaw_about(double yaw_deg, const Eigen::Vector3d& pivot, const Eigen::Vector3d& shift) {
    const double a = yaw_deg * std::numbers::pi / 180.0;
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    t.translation = pivot - t.rotation * pivot + shift;
    return t;
}

double rotation_angle_deg(const RigidTransform& t) {
    const double c = std::clamp((t.rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

RigidTransform estimate_rigid(const Eigen::Ref<const Eigen::Matrix3Xd>& src, const Eigen::Ref<const Eigen::Matrix3Xd>& dst) {
    if (src.cols() != dst.cols() || src.cols() < 3) throw InsufficientDataError("rigid estimate needs >= 3 point pairs");
    const Eigen::Vector3d cs = src.rowwise().mean();
    const Eigen::Vector3d cd = dst.rowwise().mean();
    const Eigen::Matrix3d h = (src.colwise() - cs) * (dst.colwise() - cd).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    RigidTransform t;
    t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
    t.translation = cd - t.rotation * cs;
    return t;
}

double vertical_bias(const Grid& moving, const Grid& fixed) {
    require_same_geometry(moving.header(), fixed.header(), "vertical_bias");
    std::vector<double> diff;
    for (std::size_t i = 0; i < moving.size(); ++i)
        if (moving.valid(i) && fixed.valid(i)) diff.push_back(fixed[i] - moving[i]);
    if (diff.size() < 100)
        throw InsufficientDataError("vertical_bias: only " + std::to_string(diff.size()) + " overlapping pixels (need 100)");
    return median(Eigen::Map<const Eigen::VectorXd>(diff.data(), static_cast<Eigen::Index>(diff.size())));
}

namespace {

Eigen::Matrix3Xd grid_cloud(const Grid& grid, std::size_t max_points, const char* which) {
    std::vector<std::size_t> valid;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.valid(i)) valid.push_back(i);
    if (valid.size() < 1000)
        throw InsufficientDataError(std::string("icp: ") + which + " grid has " + std::to_string(valid.size()) +
                                    " valid cells (need 1000)");
    const std::size_t stride = (valid.size() + max_points - 1) / max_points;
    const auto& h = grid.header();
    const auto ncols = static_cast<std::size_t>(h.ncols);
    Eigen::Matrix3Xd cloud(3, static_cast<Eigen::Index>((valid.size() + stride - 1) / stride));
    Eigen::Index k = 0;
    for (std::size_t j = 0; j < valid.size(); j += stride, ++k) {
        const std::size_t i = valid[j];
        cloud.col(k) << h.center_x(static_cast<double>(i % ncols)), h.center_y(static_cast<double>(i / ncols)), grid[i];
    }
    return cloud;
}

// Fixed-side cloud: every retained cell contributes a d x d lattice of
// bilinear samples (the centre and its north-east sub-steps), so nearest
// neighbours are not quantised to whole cells.
Eigen::Matrix3Xd surface_cloud(const Grid& grid, std::size_t max_points, int densify) {
    const Eigen::Matrix3Xd centres = grid_cloud(grid, max_points, "fixed");
    if (densify <= 1) return centres;
    const double cs = grid.header().cellsize;
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(static_cast<std::size_t>(centres.cols() * densify * densify));
    for (Eigen::Index k = 0; k < centres.cols(); ++k)
        for (int a = 0; a < densify; ++a)
            for (int b = 0; b < densify; ++b) {
                const double x = centres(0, k) + static_cast<double>(a) / densify * cs;
                const double y = centres(1, k) + static_cast<double>(b) / densify * cs;
                const double z = sample_bilinear(grid, x, y);
                if (!grid.is_nodata_value(z)) pts.emplace_back(x, y, z);
            }
    Eigen::Matrix3Xd cloud(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) cloud.col(static_cast<Eigen::Index>(i)) = pts[i];
    return cloud;
}

struct Correspondences {
    Eigen::Matrix3Xd src;
    Eigen::Matrix3Xd dst;
    double rmse = 0.0;
};

// `tree` indexes the fixed cloud with heights multiplied by z_scale; pair
// distances and the RMSE are in true coordinates.
Correspondences match(const Eigen::Matrix3Xd& moving, const RigidTransform& t, const Eigen::Matrix3Xd& fixed,
                      const KdTree3& tree, double z_scale, double rejection_factor) {
    const Eigen::Index n = moving.cols();
    Eigen::Matrix3Xd moved(3, n);
    std::vector<Eigen::Index> nn(static_cast<std::size_t>(n));
    Eigen::VectorXd dist(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        moved.col(i) = t.apply(moving.col(i));
        Eigen::Vector3d q = moved.col(i);
        q.z() *= z_scale;
        const Eigen::Index idx = tree.nearest(q).first;
        nn[static_cast<std::size_t>(i)] = idx;
        dist(i) = (fixed.col(idx) - moved.col(i)).norm();
    }
    const double cutoff = rejection_factor * median(dist);

    Correspondences c;
    c.src.resize(3, n);
    c.dst.resize(3, n);
    Eigen::Index k = 0;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dist(i) > cutoff) continue;
        c.src.col(k) = moved.col(i);
        c.dst.col(k) = fixed.col(nn[static_cast<std::size_t>(i)]);
        ss += dist(i) * dist(i);
        ++k;
    }
    if (k < 3) throw DivergenceError("icp: fewer than 3 correspondences survive rejection");
    c.src.conservativeResize(3, k);
    c.dst.conservativeResize(3, k);
    c.rmse = std::sqrt(ss / static_cast<double>(k));
    return c;
}

bool xy_boxes_overlap(const Eigen::Matrix3Xd& a, const Eigen::Matrix3Xd& b, double margin) {
    const Eigen::Vector3d amin = a.rowwise().minCoeff(), amax = a.rowwise().maxCoeff();
    const Eigen::Vector3d bmin = b.rowwise().minCoeff(), bmax = b.rowwise().maxCoeff();
    for (int d = 0; d < 2; ++d)
        if (amax(d) + margin < bmin(d) || bmax(d) + margin < amin(d)) return false;
    return true;
}

}  // namespace

IcpResult icp_register(const Grid& moving, const Grid& fixed, const IcpOptions& options, const RigidTransform& initial) {
    if (options.max_iters < 1) throw UsageError("icp: max_iters must be positive");
    if (options.max_points < 3) throw UsageError("icp: max_points must be at least 3");

    Eigen::Matrix3Xd mov = grid_cloud(moving, options.max_points, "moving");
    Eigen::Matrix3Xd fix = surface_cloud(fixed, options.max_points, options.densify);

    // Work about the fixed cloud's centroid for conditioning.
    const Eigen::Vector3d centre = fix.rowwise().mean();
    mov.colwise() -= centre;
    fix.colwise() -= centre;
    const RigidTransform to_local{Eigen::Matrix3d::Identity(), -centre};
    RigidTransform current = to_local * initial * to_local.inverse();

    {
        Eigen::Matrix3Xd moved(3, mov.cols());
        for (Eigen::Index i = 0; i < mov.cols(); ++i) moved.col(i) = current.apply(mov.col(i));
        const double margin = 0.5 * std::max(moving.header().cellsize, fixed.header().cellsize);
        if (!xy_boxes_overlap(moved, fix, margin)) throw DivergenceError("icp: moving and fixed grids do not overlap");
    }

    Eigen::Matrix3Xd fix_scaled = fix;
    fix_scaled.row(2) *= options.z_scale;
    const KdTree3 tree(fix_scaled);
    IcpResult result;
    Correspondences corr = match(mov, current, fix, tree, options.z_scale, options.rejection_factor);
    result.rmse_history.push_back(corr.rmse);

    for (int iter = 0; iter < options.max_iters; ++iter) {
        const RigidTransform step = estimate_rigid(corr.src, corr.dst);
        const RigidTransform candidate = step * current;
        Correspondences next = match(mov, candidate, fix, tree, options.z_scale, options.rejection_factor);
        result.iterations = iter + 1;
        if (next.rmse > corr.rmse) {
            result.converged = true;
            break;
        }
        const double gain = corr.rmse - next.rmse;
        current = candidate;
        corr = std::move(next);
        result.rmse_history.push_back(corr.rmse);
        if (gain < options.tol) {
            result.converged = true;
            break;
        }
    }

    result.transform = to_local.inverse() * current * to_local;
    result.rmse = corr.rmse;
    return result;
}

Grid apply_transform(const Grid& grid, const RigidTransform& t, const GridHeader& target) {
    validate(target);
    Grid out(target, target.nodata);
    const Eigen::Matrix3d rt = t.rotation.transpose();
    const double tol = 1e-6 * target.cellsize;
    for (int r = 0; r < target.nrows; ++r) {
        for (int c = 0; c < target.ncols; ++c) {
            const double x = target.center_x(c), y = target.center_y(r);
            // Find the source point whose image lands on (x, y): the image's
            // horizontal position depends on its height unless the rotation
            // is a pure yaw, so iterate on the height.
            double z = 0.0;
            bool ok = false;
            for (int it = 0; it < 12; ++it) {
                const Eigen::Vector3d p = rt * (Eigen::Vector3d(x, y, z) - t.translation);
                const double h = sample_bilinear(grid, p.x(), p.y());
                if (!std::isfinite(h)) break;
                const Eigen::Vector3d q = t.apply(Eigen::Vector3d(p.x(), p.y(), h));
                const bool settled = std::abs(q.x() - x) <= tol && std::abs(q.y() - y) <= tol;
                z = q.z();
                if (settled) {
                    ok = true;
                    break;
                }
            }
            if (ok) out(r, c) = z;
        }
    }
    return out;
}

void write_transform(std::ostream& out, const RigidTransform& t) {
    for (int r = 0; r < 3; ++r)
        out << text::significant(t.rotation(r, 0), 17) << ' ' << text::significant(t.rotation(r, 1), 17) << ' '
            << text::significant(t.rotation(r, 2), 17) << '\n';
    out << text::significant(t.translation(0), 17) << ' ' << text::significant(t.translation(1), 17) << ' '
        << text::significant(t.translation(2), 17) << '\n';
}

RigidTransform read_transform(std::istream& in) {
    std::vector<double> v;
    for (std::string tok; in >> tok;) {
        auto d = text::parse_double(tok);
        if (!d || !std::isfinite(*d)) throw ParseError("transform file: bad number '" + tok + "'");
        v.push_back(*d);
    }
    if (v.size() != 12) throw StructuralError("transform file: expected 12 numbers, got " + std::to_string(v.size()));
    RigidTransform t;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) t.rotation(r, c) = v[static_cast<std::size_t>(r * 3 + c)];
    t.translation << v[9], v[10], v[11];
    if ((t.rotation.transpose() * t.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        t.rotation.determinant() < 0.0)
        throw StructuralError("transform file: rotation is not orthonormal with det +1");
    return t;
}

void write_transform_file(const std::string& path, const RigidTransform& t) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write transform file '" + path + "'");
    write_transform(out, t);
}

RigidTransform read_transform_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open transform file '" + path + "'");
    return read_transform(in);
}

}  // namespace demfuse
