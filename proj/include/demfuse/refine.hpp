#pragma once

// Turns raw DEM-minus-reference residuals into smoothed per-pixel training
// targets: 3*NMAD outlier removal, Freedman-Diaconis binning of every
// feature, bin-wise mean of the absolute residuals, then the mean across
// features.

#include "demfuse/features.hpp"
#include "demfuse/grid.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <vector>

namespace demfuse {

struct ResidualVector {
    std::vector<std::size_t> pixel_indices;
    Eigen::VectorXd signed_error;    // dem - reference, meters
    Eigen::VectorXd absolute_error;  // |signed_error|

    Eigen::Index size() const { return signed_error.size(); }
};

/// A feature table with residuals for the same rows, in the same order.
struct ResidualSamples {
    FeatureTable table;
    ResidualVector residuals;
};

struct BinSpec {
    int feature_index = 0;
    double iqr = 0.0;             // I
    std::size_t sample_count = 0; // k
    double bin_width = 0.0;       // h = 2 I k^(-1/3)
    int bin_count = 0;            // N
    std::vector<double> edges;    // N + 1 uniform edges, rightmost inclusive
    std::vector<std::size_t> counts;
    std::vector<int> assignment;  // bin of every sample
    std::vector<double> bin_means;  // filled by mean_abs_per_bin()
    bool degenerate = false;      // zero IQR or zero range: one bin
};

/// Residuals at the table pixels. Pixels invalid in either grid are dropped
/// from both the table and the residuals.
ResidualSamples compute_residuals(const Grid& dem, const Grid& reference, const FeatureTable& table);

/// Drops pixels with |e - median(e)| > 3 NMAD(e) (signed residuals) along
/// with their feature rows. Throws InsufficientDataError below 10 survivors.
ResidualSamples remove_outliers(const ResidualSamples& samples);

/// Freedman-Diaconis binning with type-7 quantiles. Throws
/// InsufficientDataError for fewer than 10 values; zero-IQR or constant
/// features produce a single bin flagged `degenerate`.
BinSpec fd_bin(const Eigen::Ref<const Eigen::VectorXd>& feature_values);

/// Mean absolute residual of each bin (NaN for empty bins).
std::vector<double> mean_abs_per_bin(const BinSpec& bins, const ResidualVector& residuals);

/// Every pixel receives the mean absolute residual of its bin; pixels in
/// bins holding fewer than `min_count` samples receive NaN (missing).
Eigen::VectorXd binwise_smooth(const BinSpec& bins, const ResidualVector& residuals, std::size_t min_count);

/// Per-pixel mean of the non-missing entries; NaN when all are missing.
Eigen::VectorXd combine_smoothed(const std::vector<Eigen::VectorXd>& per_feature);

/// max(10, 0.001 k)
std::size_t default_min_count(std::size_t k);

struct TrainingSet {
    Eigen::MatrixXd features;  // m x n
    Eigen::VectorXd targets;   // m, meters, >= 0
    std::vector<std::string> feature_names;
    std::vector<std::size_t> pixel_indices;
    int ncols = 0;
    std::vector<BinSpec> bins;  // per feature, empty when not smoothed

    Eigen::Index size() const { return targets.size(); }
};

struct RefineOptions {
    std::optional<std::size_t> min_count;  // default_min_count(k) when unset
    bool smooth = true;                    // false: raw |e| after outlier removal
};

/// extract features -> residuals -> outlier removal -> per-feature binning
/// and smoothing -> combination. Pixels whose smoothed target is missing
/// for every feature are dropped.
TrainingSet build_training_set(const Grid& dem, const Grid& reference, const Grid* aux,
                               const std::vector<FeatureKind>& kinds, const RefineOptions& options = {});

/// Concatenate training sets with identical feature names (pooled training).
TrainingSet concatenate(const std::vector<TrainingSet>& sets);

/// CSV: `row,col,<features...>,target`.
void write_training_csv(std::ostream& out, const TrainingSet& ts);

/// CSV of the feature-error models: `feature,bin,lower,upper,count,mean_abs_residual`.
void write_bins_csv(std::ostream& out, const TrainingSet& ts);

}  // namespace demfuse
