#include "demfuse/synth.hpp"

#include "demfuse/errors.hpp"
#include "demfuse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace demfuse {

namespace {

bool is_power_of_two_plus_one(int n) {
    if (n < 3) return false;
    const int m = n - 1;
    return (m & (m - 1)) == 0;
}

}  // namespace

Grid generate_terrain(const TerrainSpec& spec, std::uint64_t seed) {
    if (!is_power_of_two_plus_one(spec.size))
        throw UsageError("terrain size must be 2^k + 1 (e.g. 129, 257), got " + std::to_string(spec.size));
    if (!(spec.roughness > 0.0) || spec.roughness > 1.0) throw UsageError("terrain roughness must be in (0, 1]");
    if (!(spec.max_height > spec.min_height)) throw UsageError("terrain height range is empty");

    const int n = spec.size;
    SplitMix64 rng(seed);
    HeightArray h = HeightArray::Zero(n, n);
    double scale = 1.0;
    h(0, 0) = rng.uniform(-scale, scale);
    h(0, n - 1) = rng.uniform(-scale, scale);
    h(n - 1, 0) = rng.uniform(-scale, scale);
    h(n - 1, n - 1) = rng.uniform(-scale, scale);

    for (int step = n - 1; step > 1; step /= 2) {
        const int half = step / 2;
        // Diamond: square centres from their four corners.
        for (int r = half; r < n; r += step)
            for (int c = half; c < n; c += step) {
                const double avg =
                    (h(r - half, c - half) + h(r - half, c + half) + h(r + half, c - half) + h(r + half, c + half)) / 4.0;
                h(r, c) = avg + rng.uniform(-scale, scale);
            }
        // Square: edge midpoints from the available diamond neighbours.
        for (int r = 0; r < n; r += half)
            for (int c = (r / half) % 2 == 0 ? half : 0; c < n; c += step) {
                double sum = 0.0;
                int count = 0;
                if (r >= half) sum += h(r - half, c), ++count;
                if (r + half < n) sum += h(r + half, c), ++count;
                if (c >= half) sum += h(r, c - half), ++count;
                if (c + half < n) sum += h(r, c + half), ++count;
                h(r, c) = sum / count + rng.uniform(-scale, scale);
            }
        scale *= spec.roughness;
    }

    const double lo = h.minCoeff(), hi = h.maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    h = spec.min_height + (h - lo) / span * (spec.max_height - spec.min_height);

    GridHeader header;
    header.ncols = n;
    header.nrows = n;
    header.cellsize = spec.cellsize;
    header.xll = spec.xll;
    header.yll = spec.yll;
    return Grid(header, std::move(h));
}

Grid add_buildings(const Grid& terrain, double density, std::pair<double, double> height_range, std::uint64_t seed) {
    if (density < 0.0 || density > 1.0) throw UsageError("building density must be in [0, 1]");
    Grid out = terrain;
    if (density == 0.0) return out;

    SplitMix64 rng(seed);
    const int rows = terrain.rows(), cols = terrain.cols();
    std::vector<char> occupied(terrain.size(), 0);
    const auto target = static_cast<std::size_t>(density * static_cast<double>(terrain.size()));
    std::size_t covered = 0;
    const int max_side = std::max(4, std::min(14, std::min(rows, cols) / 4));

    for (int attempt = 0; attempt < 20000 && covered < target; ++attempt) {
        const int w = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_side - 3)));
        const int hgt = 4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_side - 3)));
        if (w + 2 > cols || hgt + 2 > rows) continue;
        const int c0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cols - w - 1)));
        const int r0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(rows - hgt - 1)));
        const double extra = rng.uniform(height_range.first, height_range.second);

        // Keep a one-cell street between blocks.
        bool free = true;
        for (int r = r0 - 1; r <= r0 + hgt && free; ++r)
            for (int c = c0 - 1; c <= c0 + w; ++c)
                if (occupied[static_cast<std::size_t>(r) * cols + c]) {
                    free = false;
                    break;
                }
        if (!free) continue;

        double base = -std::numeric_limits<double>::infinity();
        bool valid = true;
        for (int r = r0; r < r0 + hgt; ++r)
            for (int c = c0; c < c0 + w; ++c) {
                valid = valid && terrain.valid(r, c);
                if (terrain.valid(r, c)) base = std::max(base, terrain(r, c));
            }
        if (!valid) continue;

        for (int r = r0; r < r0 + hgt; ++r)
            for (int c = c0; c < c0 + w; ++c) {
                out(r, c) = base + extra;
                occupied[static_cast<std::size_t>(r) * cols + c] = 1;
            }
        covered += static_cast<std::size_t>(w) * static_cast<std::size_t>(hgt);
    }
    return out;
}

namespace {

// Smooth zero-mean field with the given RMS: a low-roughness diamond-square
// surface cropped to the grid. Independent of the noise stream.
Grid artifact_field(const GridHeader& header, double rms, std::uint64_t seed) {
    Grid field(header, 0.0);
    if (rms == 0.0) return field;
    if (rms < 0.0) throw UsageError("error model: artifact_rms must be >= 0");
    TerrainSpec spec;
    spec.size = 3;
    while (spec.size < std::max(header.nrows, header.ncols)) spec.size = 2 * spec.size - 1;
    spec.roughness = 0.5;
    spec.min_height = 0.0;
    spec.max_height = 1.0;
    const Grid surface = generate_terrain(spec, seed ^ 0xA5A5A5A5A5A5A5A5ULL);
    double mean = 0.0;
    for (int r = 0; r < header.nrows; ++r)
        for (int c = 0; c < header.ncols; ++c) mean += surface(r, c);
    mean /= static_cast<double>(header.size());
    double ss = 0.0;
    for (int r = 0; r < header.nrows; ++r)
        for (int c = 0; c < header.ncols; ++c) ss += (surface(r, c) - mean) * (surface(r, c) - mean);
    const double scale = ss > 0.0 ? rms / std::sqrt(ss / static_cast<double>(header.size())) : 0.0;
    for (int r = 0; r < header.nrows; ++r)
        for (int c = 0; c < header.ncols; ++c) field(r, c) = (surface(r, c) - mean) * scale;
    return field;
}

Grid driver_or_zero(const Grid& truth, FeatureKind kind) {
    Grid f = compute_feature(truth, kind);
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!f.valid(i)) f[i] = 0.0;
    return f;
}

}  // namespace

Corruption corrupt(const Grid& truth, const ErrorModel& model) {
    if (model.base_sigma < 0.0) throw UsageError("error model: base_sigma must be >= 0");
    const Grid driver = driver_or_zero(truth, model.driver);
    Grid sigma(truth.header(), truth.nodata());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (!truth.valid(i)) continue;
        sigma[i] = model.base_sigma + model.feature_gain * driver[i];
        if (sigma[i] < 0.0) throw UsageError("error model yields negative sigma");
    }

    const Grid artifact = artifact_field(truth.header(), model.artifact_rms, model.seed);
    Corruption out{Grid(truth.header(), truth.nodata()), Grid(truth.header(), truth.nodata()), sigma};
    SplitMix64 rng(model.seed);
    const int rows = truth.rows();
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < truth.cols(); ++c) {
            const double z = rng.normal();
            if (!truth.valid(r, c)) continue;
            const double plane = model.tilt_x * c + model.tilt_y * (rows - 1 - r);
            const double s = sigma(r, c);
            const double a = artifact(r, c);
            out.dem(r, c) = truth(r, c) + model.bias + plane + a + s * z;
            out.true_error(r, c) = std::sqrt(s * s + a * a);
        }
    return out;
}

ErrorModel error_preset(std::string_view name, std::uint64_t seed) {
    ErrorModel m;
    m.seed = seed;
    if (name == "insar-like") {
        m.base_sigma = 0.5;
        m.feature_gain = 0.08;
        m.driver = FeatureKind::Roughness;
        m.artifact_rms = 1.0;
        return m;
    }
    if (name == "optical-like") {
        m.base_sigma = 0.5;
        m.feature_gain = 0.6;
        m.driver = FeatureKind::Entropy;
        return m;
    }
    throw UsageError("unknown error preset '" + std::string(name) + "'");
}

}  // namespace demfuse
