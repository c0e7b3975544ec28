#pragma once

// Accuracy measures. The scalar routines accept any Eigen dense expression
// (vectors, array blocks, mapped std::vector storage).

#include "demfuse/errors.hpp"
#include "demfuse/grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace demfuse {

/// Scale factor making the MAD a consistent sigma estimator for Gaussian data.
inline constexpr double kNmadScale = 1.4826;

namespace detail {

template <typename Derived>
std::vector<typename Derived::Scalar> to_vector(const Eigen::DenseBase<Derived>& v) {
    const auto& d = v.derived();
    std::vector<typename Derived::Scalar> out;
    out.reserve(static_cast<std::size_t>(d.size()));
    for (Eigen::Index c = 0; c < d.cols(); ++c)
        for (Eigen::Index r = 0; r < d.rows(); ++r) out.push_back(d(r, c));
    return out;
}

// Type-7 quantile of already sorted data.
template <typename Scalar>
Scalar sorted_quantile(const std::vector<Scalar>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const Scalar frac = static_cast<Scalar>(pos - static_cast<double>(lo));
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

/// Linear-interpolation (type-7) quantile, p in [0, 1].
template <typename Derived>
typename Derived::Scalar quantile(const Eigen::DenseBase<Derived>& values, double p) {
    if (values.size() == 0) throw InsufficientDataError("quantile of an empty sample");
    auto v = detail::to_vector(values);
    std::sort(v.begin(), v.end());
    return detail::sorted_quantile(v, std::clamp(p, 0.0, 1.0));
}

/// Median; the mean of the two middle values for even counts.
template <typename Derived>
typename Derived::Scalar median(const Eigen::DenseBase<Derived>& values) {
    return quantile(values, 0.5);
}

template <typename Derived>
typename Derived::Scalar rmse(const Eigen::DenseBase<Derived>& residuals) {
    if (residuals.size() == 0) throw InsufficientDataError("rmse of an empty sample");
    return std::sqrt(residuals.derived().array().square().mean());
}

/// 1.4826 * median(|e - median(e)|).
template <typename Derived>
typename Derived::Scalar nmad(const Eigen::DenseBase<Derived>& residuals) {
    if (residuals.size() == 0) throw InsufficientDataError("nmad of an empty sample");
    using Scalar = typename Derived::Scalar;
    const Scalar med = median(residuals);
    const auto deviations = (residuals.derived().array() - med).abs().eval();
    return static_cast<Scalar>(kNmadScale) * median(deviations);
}

template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar pearson_correlation(const Eigen::DenseBase<DerivedX>& x,
                                              const Eigen::DenseBase<DerivedY>& y) {
    if (x.size() != y.size()) throw UsageError("correlation: length mismatch");
    if (x.size() < 2) throw InsufficientDataError("correlation needs at least two samples");
    const auto xc = (x.derived().array() - x.derived().array().mean()).eval();
    const auto yc = (y.derived().array() - y.derived().array().mean()).eval();
    const auto sxx = xc.square().sum();
    const auto syy = yc.square().sum();
    if (!(sxx > 0) || !(syy > 0)) throw InsufficientDataError("correlation: zero variance");
    const auto r = (xc * yc).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, decltype(r)(-1), decltype(r)(1));
}

/// Percentage of pixels valid in all three grids where the fused height is
/// strictly closer to the truth than the baseline height.
double pct_pixels_improved(const Grid& fused, const Grid& baseline, const Grid& truth);

/// Signed residuals dem - truth over doubly-valid pixels.
Eigen::VectorXd valid_residuals(const Grid& dem, const Grid& truth);

struct AccuracyReport {
    double rmse = 0.0;
    double nmad = 0.0;
    std::size_t sample_count = 0;
    double correlation = 0.0;  // heights vs truth heights; NaN if undefined
    std::optional<double> pct_improved;
};

/// Metrics over the pixels valid in every supplied grid.
AccuracyReport accuracy_report(const Grid& dem, const Grid& truth, const Grid* baseline = nullptr);

/// Flat `key=value` text, one metric per line.
std::string to_key_value(const AccuracyReport& report);

}  // namespace demfuse
