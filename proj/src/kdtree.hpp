#pragma once

// Static 3-d tree for nearest-neighbour queries over a fixed point set.

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

namespace demfuse {

class KdTree3 {
public:
    explicit KdTree3(const Eigen::Matrix3Xd& points) : points_(points), order_(static_cast<std::size_t>(points.cols())) {
        std::iota(order_.begin(), order_.end(), Eigen::Index{0});
        nodes_.reserve(order_.size());
        root_ = build(0, order_.size(), 0);
    }

    /// Index and squared distance of the nearest point.
    std::pair<Eigen::Index, double> nearest(const Eigen::Vector3d& q) const {
        Eigen::Index best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        search(root_, q, best, best_d2);
        return {best, best_d2};
    }

private:
    struct Node {
        Eigen::Index point;
        int axis;
        int left = -1;
        int right = -1;
    };

    int build(std::size_t begin, std::size_t end, int depth) {
        if (begin >= end) return -1;
        const int axis = depth % 3;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](Eigen::Index a, Eigen::Index b) { return points_(axis, a) < points_(axis, b); });
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({order_[mid], axis});
        const int left = build(begin, mid, depth + 1);
        const int right = build(mid + 1, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    void search(int id, const Eigen::Vector3d& q, Eigen::Index& best, double& best_d2) const {
        if (id < 0) return;
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const double d2 = (points_.col(n.point) - q).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
            best_d2 = d2;
            best = n.point;
        }
        const double diff = q(n.axis) - points_(n.axis, n.point);
        const int near = diff < 0 ? n.left : n.right;
        const int far = diff < 0 ? n.right : n.left;
        search(near, q, best, best_d2);
        if (diff * diff <= best_d2) search(far, q, best, best_d2);
    }

    const Eigen::Matrix3Xd& points_;
    std::vector<Eigen::Index> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace demfuse
