#include "demfuse/refine.hpp"

#include "demfuse/errors.hpp"
#include "demfuse/metrics.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace demfuse {

ResidualSamples compute_residuals(const Grid& dem, const Grid& reference, const FeatureTable& table) {
    require_same_geometry(dem.header(), reference.header(), "compute_residuals");
    std::vector<Eigen::Index> keep;
    keep.reserve(table.pixel_indices.size());
    for (std::size_t r = 0; r < table.pixel_indices.size(); ++r) {
        const std::size_t idx = table.pixel_indices[r];
        if (idx >= dem.size()) throw GeometryError("compute_residuals: table pixel index outside the grid");
        if (dem.valid(idx) && reference.valid(idx)) keep.push_back(static_cast<Eigen::Index>(r));
    }

    ResidualSamples out;
    out.table = table.select_rows(keep);
    out.residuals.pixel_indices = out.table.pixel_indices;
    const auto m = static_cast<Eigen::Index>(keep.size());
    out.residuals.signed_error.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const std::size_t idx = out.table.pixel_indices[static_cast<std::size_t>(i)];
        out.residuals.signed_error(i) = dem[idx] - reference[idx];
    }
    out.residuals.absolute_error = out.residuals.signed_error.cwiseAbs();
    return out;
}

ResidualSamples remove_outliers(const ResidualSamples& samples) {
    const auto& e = samples.residuals.signed_error;
    if (e.size() == 0) throw InsufficientDataError("remove_outliers: no residuals");
    const double med = median(e);
    const double threshold = 3.0 * nmad(e);

    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(e.size()));
    for (Eigen::Index i = 0; i < e.size(); ++i)
        if (!(std::abs(e(i) - med) > threshold)) keep.push_back(i);
    if (keep.size() < 10)
        throw InsufficientDataError("remove_outliers: only " + std::to_string(keep.size()) +
                                    " samples survive the 3*NMAD test (need 10)");

    ResidualSamples out;
    out.table = samples.table.select_rows(keep);
    out.residuals.pixel_indices = out.table.pixel_indices;
    out.residuals.signed_error.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        out.residuals.signed_error(static_cast<Eigen::Index>(i)) = e(keep[i]);
    out.residuals.absolute_error = out.residuals.signed_error.cwiseAbs();
    return out;
}

BinSpec fd_bin(const Eigen::Ref<const Eigen::VectorXd>& feature_values) {
    const auto k = static_cast<std::size_t>(feature_values.size());
    if (k < 10) throw InsufficientDataError("fd_bin needs at least 10 values, got " + std::to_string(k));
    if (!feature_values.allFinite()) throw UsageError("fd_bin: non-finite feature value");

    BinSpec bins;
    bins.sample_count = k;
    const double lo = feature_values.minCoeff();
    const double hi = feature_values.maxCoeff();
    bins.iqr = quantile(feature_values, 0.75) - quantile(feature_values, 0.25);
    bins.bin_width = 2.0 * bins.iqr * std::pow(static_cast<double>(k), -1.0 / 3.0);

    if (!(bins.iqr > 0.0) || !(hi > lo)) {
        bins.degenerate = true;
        bins.bin_count = 1;
        bins.bin_width = hi - lo;
        bins.edges = {lo, hi};
        bins.counts = {k};
        bins.assignment.assign(k, 0);
        return bins;
    }

    const double n = std::ceil((hi - lo) / bins.bin_width);
    if (n > 1e7) throw UsageError("fd_bin: more than 1e7 bins; feature range is extreme relative to its IQR");
    bins.bin_count = std::max(1, static_cast<int>(n));
    bins.edges.resize(static_cast<std::size_t>(bins.bin_count) + 1);
    for (int i = 0; i <= bins.bin_count; ++i) bins.edges[static_cast<std::size_t>(i)] = lo + i * bins.bin_width;
    // Rounding in lo + N*h may leave the top edge an ulp short of the maximum.
    bins.edges.back() = std::max(bins.edges.back(), hi);
    bins.counts.assign(static_cast<std::size_t>(bins.bin_count), 0);
    bins.assignment.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const double v = feature_values(static_cast<Eigen::Index>(i));
        const auto above = std::upper_bound(bins.edges.begin(), bins.edges.end(), v);
        const int b = std::clamp(static_cast<int>(above - bins.edges.begin()) - 1, 0, bins.bin_count - 1);
        bins.assignment[i] = b;
        ++bins.counts[static_cast<std::size_t>(b)];
    }
    return bins;
}

std::vector<double> mean_abs_per_bin(const BinSpec& bins, const ResidualVector& residuals) {
    if (bins.assignment.size() != static_cast<std::size_t>(residuals.size()))
        throw StructuralError("binwise smoothing: bins and residuals have different lengths");
    std::vector<double> sums(static_cast<std::size_t>(bins.bin_count), 0.0);
    for (std::size_t i = 0; i < bins.assignment.size(); ++i)
        sums[static_cast<std::size_t>(bins.assignment[i])] += residuals.absolute_error(static_cast<Eigen::Index>(i));
    for (std::size_t b = 0; b < sums.size(); ++b)
        sums[b] = bins.counts[b] ? sums[b] / static_cast<double>(bins.counts[b])
                                 : std::numeric_limits<double>::quiet_NaN();
    return sums;
}

Eigen::VectorXd binwise_smooth(const BinSpec& bins, const ResidualVector& residuals, std::size_t min_count) {
    const auto means = mean_abs_per_bin(bins, residuals);
    Eigen::VectorXd out(residuals.size());
    for (std::size_t i = 0; i < bins.assignment.size(); ++i) {
        const auto b = static_cast<std::size_t>(bins.assignment[i]);
        out(static_cast<Eigen::Index>(i)) =
            bins.counts[b] >= min_count ? means[b] : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

Eigen::VectorXd combine_smoothed(const std::vector<Eigen::VectorXd>& per_feature) {
    if (per_feature.empty()) throw UsageError("combine_smoothed: no inputs");
    const Eigen::Index m = per_feature.front().size();
    for (const auto& v : per_feature)
        if (v.size() != m) throw StructuralError("combine_smoothed: arrays are not aligned");
    Eigen::VectorXd out(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double sum = 0.0;
        int count = 0;
        for (const auto& v : per_feature)
            if (!std::isnan(v(i))) sum += v(i), ++count;
        out(i) = count ? sum / count : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::size_t default_min_count(std::size_t k) {
    return std::max<std::size_t>(10, static_cast<std::size_t>(0.001 * static_cast<double>(k)));
}

TrainingSet build_training_set(const Grid& dem, const Grid& reference, const Grid* aux,
                               const std::vector<FeatureKind>& kinds, const RefineOptions& options) {
    require_same_geometry(dem.header(), reference.header(), "build_training_set");
    const FeatureTable table = extract_feature_table(dem, aux, kinds);
    const ResidualSamples samples = remove_outliers(compute_residuals(dem, reference, table));
    const auto k = static_cast<std::size_t>(samples.residuals.size());

    TrainingSet ts;
    ts.feature_names = samples.table.names;
    ts.ncols = dem.cols();

    Eigen::VectorXd targets;
    if (options.smooth) {
        const std::size_t min_count = options.min_count.value_or(default_min_count(k));
        std::vector<Eigen::VectorXd> smoothed;
        for (Eigen::Index j = 0; j < samples.table.cols(); ++j) {
            BinSpec bins = fd_bin(samples.table.values.col(j));
            bins.feature_index = static_cast<int>(j);
            bins.bin_means = mean_abs_per_bin(bins, samples.residuals);
            smoothed.push_back(binwise_smooth(bins, samples.residuals, min_count));
            ts.bins.push_back(std::move(bins));
        }
        targets = combine_smoothed(smoothed);
    } else {
        targets = samples.residuals.absolute_error;
    }

    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < targets.size(); ++i)
        if (std::isfinite(targets(i))) keep.push_back(i);
    ts.features.resize(static_cast<Eigen::Index>(keep.size()), samples.table.cols());
    ts.targets.resize(static_cast<Eigen::Index>(keep.size()));
    ts.pixel_indices.reserve(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const auto i = keep[r];
        ts.features.row(static_cast<Eigen::Index>(r)) = samples.table.values.row(i);
        ts.targets(static_cast<Eigen::Index>(r)) = targets(i);
        ts.pixel_indices.push_back(samples.table.pixel_indices[static_cast<std::size_t>(i)]);
    }
    return ts;
}

TrainingSet concatenate(const std::vector<TrainingSet>& sets) {
    if (sets.empty()) throw UsageError("concatenate: no training sets");
    TrainingSet out;
    out.feature_names = sets.front().feature_names;
    out.ncols = sets.front().ncols;
    Eigen::Index m = 0;
    for (const auto& s : sets) {
        if (s.feature_names != out.feature_names)
            throw UsageError("concatenate: training sets have different feature lists");
        m += s.size();
    }
    out.features.resize(m, static_cast<Eigen::Index>(out.feature_names.size()));
    out.targets.resize(m);
    Eigen::Index row = 0;
    for (const auto& s : sets) {
        out.features.middleRows(row, s.size()) = s.features;
        out.targets.segment(row, s.size()) = s.targets;
        out.pixel_indices.insert(out.pixel_indices.end(), s.pixel_indices.begin(), s.pixel_indices.end());
        row += s.size();
    }
    return out;
}

void write_training_csv(std::ostream& out, const TrainingSet& ts) {
    out << "row,col";
    for (const auto& name : ts.feature_names) out << ',' << name;
    out << ",target\n";
    const auto ncols = static_cast<std::size_t>(std::max(ts.ncols, 1));
    for (Eigen::Index i = 0; i < ts.size(); ++i) {
        const std::size_t idx = ts.pixel_indices[static_cast<std::size_t>(i)];
        out << idx / ncols << ',' << idx % ncols;
        for (Eigen::Index j = 0; j < ts.features.cols(); ++j) out << ',' << text::significant(ts.features(i, j), 9);
        out << ',' << text::significant(ts.targets(i), 9) << '\n';
    }
}

void write_bins_csv(std::ostream& out, const TrainingSet& ts) {
    out << "feature,bin,lower,upper,count,mean_abs_residual\n";
    for (const auto& bins : ts.bins) {
        const auto& name = ts.feature_names[static_cast<std::size_t>(bins.feature_index)];
        for (int b = 0; b < bins.bin_count; ++b) {
            const auto ub = static_cast<std::size_t>(b);
            out << name << ',' << b << ',' << text::significant(bins.edges[ub], 9) << ','
                << text::significant(bins.edges[ub + 1], 9) << ',' << bins.counts[ub] << ','
                << (ub < bins.bin_means.size() ? text::significant(bins.bin_means[ub], 9) : std::string("nan"))
                << '\n';
        }
    }
}

}  // namespace demfuse
