#pragma once

#include "demfuse/grid.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace demfuse {

/// Per-pixel terrain descriptors over a 3x3 window. AuxErrorMap is not
/// computed: it passes an externally supplied quality raster through.
enum class FeatureKind {
    Slope,
    Aspect,
    ACV,
    TRI,
    TPI,
    Roughness,
    Ruggedness,
    SRF,
    Entropy,
    Edginess,
    AuxErrorMap,
};

/// The ten computed features, in canonical order.
inline constexpr std::array<FeatureKind, 10> kComputedFeatures = {
    FeatureKind::Slope, FeatureKind::Aspect,     FeatureKind::ACV, FeatureKind::TRI,     FeatureKind::TPI,
    FeatureKind::Roughness, FeatureKind::Ruggedness, FeatureKind::SRF, FeatureKind::Entropy, FeatureKind::Edginess,
};

std::string_view feature_name(FeatureKind kind);

/// Inverse of feature_name(); case-insensitive. Throws UsageError.
FeatureKind parse_feature_kind(std::string_view name);

/// Comma-separated list; "all" expands to kComputedFeatures.
std::vector<FeatureKind> parse_feature_list(std::string_view list);

/// 3x3 neighbourhood in row-major order, north row first:
///   0 NW  1 N  2 NE
///   3 W   4 C  5 E
///   6 SW  7 S  8 SE
using Window = std::array<double, 9>;

/// Feature value of one window. `cellsize` only affects Slope, Aspect and SRF.
double window_feature(const Window& w, double cellsize, FeatureKind kind);

/// Feature raster with the same geometry as `grid`. Border pixels and any
/// pixel whose window contains nodata are nodata.
Grid compute_feature(const Grid& grid, FeatureKind kind);

/// m valid pixels x n features.
struct FeatureTable {
    std::vector<std::size_t> pixel_indices;  // row * ncols + col
    std::vector<std::string> names;
    Eigen::MatrixXd values;                  // m x n, column j is names[j]
    int ncols = 0;                           // raster width, to recover (row, col)

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }

    /// Keep only the given rows (indices into this table), in order.
    FeatureTable select_rows(const std::vector<Eigen::Index>& rows) const;

    /// Column index of a feature name, or nullopt.
    std::optional<Eigen::Index> column(std::string_view name) const;
};

/// Rows cover exactly the pixels where `height` and every requested feature
/// are valid. `aux` must be supplied iff AuxErrorMap is requested.
FeatureTable extract_feature_table(const Grid& height, const Grid* aux, const std::vector<FeatureKind>& kinds);

/// CSV: `row,col,<names...>`, 9 significant digits.
void write_feature_csv(std::ostream& out, const FeatureTable& table);

}  // namespace demfuse
