#include "demfuse/metrics.hpp"

#include "text.hpp"

#include <limits>
#include <sstream>

namespace demfuse {

double pct_pixels_improved(const Grid& fused, const Grid& baseline, const Grid& truth) {
    require_same_geometry(fused.header(), truth.header(), "pct_pixels_improved");
    require_same_geometry(baseline.header(), truth.header(), "pct_pixels_improved");
    std::size_t total = 0;
    std::size_t better = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!fused.valid(i) || !baseline.valid(i) || !truth.valid(i)) continue;
        ++total;
        if (std::abs(fused[i] - truth[i]) < std::abs(baseline[i] - truth[i])) ++better;
    }
    if (total == 0) throw InsufficientDataError("pct_pixels_improved: no commonly valid pixels");
    return 100.0 * static_cast<double>(better) / static_cast<double>(total);
}

Eigen::VectorXd valid_residuals(const Grid& dem, const Grid& truth) {
    require_same_geometry(dem.header(), truth.header(), "valid_residuals");
    std::vector<double> res;
    res.reserve(dem.size());
    for (std::size_t i = 0; i < dem.size(); ++i)
        if (dem.valid(i) && truth.valid(i)) res.push_back(dem[i] - truth[i]);
    return Eigen::Map<Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
}

AccuracyReport accuracy_report(const Grid& dem, const Grid& truth, const Grid* baseline) {
    require_same_geometry(dem.header(), truth.header(), "accuracy_report");
    if (baseline) require_same_geometry(baseline->header(), truth.header(), "accuracy_report");

    std::vector<double> heights, truths;
    for (std::size_t i = 0; i < dem.size(); ++i) {
        if (!dem.valid(i) || !truth.valid(i)) continue;
        if (baseline && !baseline->valid(i)) continue;
        heights.push_back(dem[i]);
        truths.push_back(truth[i]);
    }
    if (heights.empty()) throw InsufficientDataError("accuracy_report: no commonly valid pixels");

    const auto n = static_cast<Eigen::Index>(heights.size());
    Eigen::Map<const Eigen::VectorXd> h(heights.data(), n);
    Eigen::Map<const Eigen::VectorXd> t(truths.data(), n);
    const Eigen::VectorXd residuals = h - t;

    AccuracyReport report;
    report.rmse = rmse(residuals);
    report.nmad = nmad(residuals);
    report.sample_count = heights.size();
    try {
        report.correlation = pearson_correlation(h, t);
    } catch (const InsufficientDataError&) {
        report.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    if (baseline) report.pct_improved = pct_pixels_improved(dem, *baseline, truth);
    return report;
}

std::string to_key_value(const AccuracyReport& report) {
    std::ostringstream out;
    out << "rmse=" << text::significant(report.rmse, 9) << '\n'
        << "nmad=" << text::significant(report.nmad, 9) << '\n'
        << "sample_count=" << report.sample_count << '\n'
        << "correlation=" << text::significant(report.correlation, 9) << '\n';
    if (report.pct_improved) out << "pct_improved=" << text::significant(*report.pct_improved, 9) << '\n';
    return out.str();
}

}  // namespace demfuse
