#pragma once

// Weight maps from error maps, and per-pixel weighted averaging of two DEMs.

#include "demfuse/grid.hpp"

#include <string_view>

namespace demfuse {

enum class WeightScheme {
    InverseSquare,  // w = 1 / max(e, floor)^2
    OneMinusNorm,   // w = 1 - (e - min) / (max - min)
};

WeightScheme parse_weight_scheme(std::string_view name);
std::string_view weight_scheme_name(WeightScheme scheme);

inline constexpr double kDefaultErrorFloor = 0.05;

/// Normalised weights of two DEMs. Wherever either is valid, the pair sums
/// to one.
struct WeightPair {
    Grid w_a;
    Grid w_b;
};

Grid weights_inverse_square(const Grid& errors, double floor = kDefaultErrorFloor);

/// Min-max normalisation over the valid pixels of this grid. When all valid
/// errors are equal every weight is 1; check has_error_spread() first if
/// that case must be reported.
Grid weights_one_minus_norm(const Grid& errors);

/// True when the valid pixels hold at least two distinct values.
bool has_error_spread(const Grid& errors);

Grid error_weights(const Grid& errors, WeightScheme scheme, double floor = kDefaultErrorFloor);

/// W_a = a / (a + b). One-sided validity gives that side weight 1 (and the
/// other 0); a zero sum gives 0.5 / 0.5; both invalid stays nodata.
WeightPair normalize_pair(const Grid& raw_a, const Grid& raw_b);

/// D_F = W_a * D_a + W_b * D_b. Where only one DEM is valid its height is
/// copied; where both are valid but the weights are not, the plain average
/// is used; where neither is valid the result is nodata.
Grid fuse_weighted(const Grid& d_a, const Grid& d_b, const WeightPair& weights);

/// Error maps -> weights -> normalise -> fuse.
Grid fuse_with_error_maps(const Grid& d_a, const Grid& d_b, const Grid& err_a, const Grid& err_b,
                          WeightScheme scheme, double floor = kDefaultErrorFloor);

/// fuse_with_error_maps() applied to the HEMs delivered with the DEMs.
Grid fuse_hem_baseline(const Grid& d_a, const Grid& d_b, const Grid& hem_a, const Grid& hem_b, WeightScheme scheme,
                       double floor = kDefaultErrorFloor);

/// Equal weights.
Grid fuse_plain_average(const Grid& d_a, const Grid& d_b);

/// Where mask == 1 take d_b, elsewhere keep d_a. Mask values must be 0, 1
/// or nodata.
Grid substitute_by_mask(const Grid& d_a, const Grid& d_b, const Grid& mask);

}  // namespace demfuse
