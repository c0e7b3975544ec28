#pragma once

// Synthetic scenes shared by the integration and acceptance tests.

#include "demfuse/features.hpp"
#include "demfuse/grid.hpp"
#include "demfuse/rng.hpp"
#include "demfuse/synth.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace testsupport {

struct Scene {
    demfuse::Grid truth;
    demfuse::Corruption a;  // insar-like
    demfuse::Corruption b;  // optical-like
};

// Same seed derivation as `demfuse synth`: terrain seed, buildings seed + 1,
// noise seeds + 2 and + 3.
inline Scene make_scene(std::uint64_t seed, double density = 0.3, int size = 257) {
    demfuse::TerrainSpec spec;
    spec.size = size;
    const demfuse::Grid terrain = demfuse::generate_terrain(spec, seed);
    Scene s;
    s.truth = demfuse::add_buildings(terrain, density, {6.0, 30.0}, seed + 1);
    s.a = demfuse::corrupt(s.truth, demfuse::error_preset("insar-like", seed + 2));
    s.b = demfuse::corrupt(s.truth, demfuse::error_preset("optical-like", seed + 3));
    return s;
}

inline std::vector<demfuse::FeatureKind> all_features() {
    return {demfuse::kComputedFeatures.begin(), demfuse::kComputedFeatures.end()};
}

inline demfuse::Grid random_grid(demfuse::SplitMix64& rng, int rows, int cols, double lo, double hi) {
    demfuse::GridHeader h;
    h.nrows = rows;
    h.ncols = cols;
    h.cellsize = 5.0;
    demfuse::Grid g(h, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.uniform(lo, hi);
    return g;
}

inline demfuse::Window random_window(demfuse::SplitMix64& rng, double scale) {
    demfuse::Window w{};
    for (double& v : w) v = rng.uniform(-scale, scale);
    return w;
}

}  // namespace testsupport
