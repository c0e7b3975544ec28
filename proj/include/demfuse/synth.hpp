#pragma once

// Synthetic ground truth and feature-correlated DEM corruption, so every
// stage of the pipeline can be exercised without proprietary data.

#include "demfuse/features.hpp"
#include "demfuse/grid.hpp"

#include <cstdint>
#include <string_view>
#include <utility>

namespace demfuse {

struct TerrainSpec {
    int size = 257;              // must be 2^k + 1
    double roughness = 0.6;      // per-level amplitude decay, in (0, 1]
    double min_height = 0.0;
    double max_height = 80.0;
    double cellsize = 5.0;
    double xll = 0.0;
    double yll = 0.0;
};

/// Diamond-square fractal surface rescaled to [min_height, max_height].
Grid generate_terrain(const TerrainSpec& spec, std::uint64_t seed);

/// Raise axis-aligned rectangular flat-roofed blocks until roughly
/// `density` of the area is covered. Roofs sit `height_range` above the
/// highest terrain cell of the footprint.
Grid add_buildings(const Grid& terrain, double density, std::pair<double, double> height_range, std::uint64_t seed);

/// Per-pixel error law:
///   sigma(i)    = base_sigma + feature_gain * driver(i)
///   artifact(i) = smooth zero-mean random field with RMS artifact_rms
///   dem(i)      = truth(i) + bias + tilt plane + artifact(i) + sigma(i) * N(0, 1)
/// The driver is evaluated on the truth surface (0 on the border ring). The
/// artifact field stands in for spatially correlated errors (atmospheric
/// delay, unwrapping) that a coherence-derived HEM does not see.
struct ErrorModel {
    double base_sigma = 1.0;
    double feature_gain = 0.0;
    FeatureKind driver = FeatureKind::Roughness;
    double artifact_rms = 0.0;
    double bias = 0.0;
    double tilt_x = 0.0;  // m per cell eastwards
    double tilt_y = 0.0;  // m per cell northwards
    std::uint64_t seed = 1;
};

struct Corruption {
    Grid dem;
    Grid true_error;        // sqrt(sigma^2 + artifact^2): a complete HEM
    Grid stochastic_sigma;  // sigma only: an HEM blind to the artifact field
};

/// Throws UsageError if sigma(i) < 0 anywhere.
Corruption corrupt(const Grid& truth, const ErrorModel& model);

/// "insar-like": roughness-driven noise plus an artifact field.
/// "optical-like": entropy-driven noise, no artifacts.
ErrorModel error_preset(std::string_view name, std::uint64_t seed);

}  // namespace demfuse
