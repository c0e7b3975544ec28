#include "demfuse/features.hpp"

#include "demfuse/errors.hpp"
#include "text.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

namespace demfuse {

namespace {

struct NamedKind {
    FeatureKind kind;
    std::string_view name;
};

constexpr std::array<NamedKind, 11> kNames = {{
    {FeatureKind::Slope, "slope"},
    {FeatureKind::Aspect, "aspect"},
    {FeatureKind::ACV, "acv"},
    {FeatureKind::TRI, "tri"},
    {FeatureKind::TPI, "tpi"},
    {FeatureKind::Roughness, "roughness"},
    {FeatureKind::Ruggedness, "ruggedness"},
    {FeatureKind::SRF, "srf"},
    {FeatureKind::Entropy, "entropy"},
    {FeatureKind::Edginess, "edginess"},
    {FeatureKind::AuxErrorMap, "aux"},
}};

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

enum : int { NW = 0, N, NE, W, C, E, SW, S, SE };

// Neighbours clockwise from north, with their (east, north) offsets in cells.
constexpr std::array<int, 8> kRing = {N, NE, E, SE, S, SW, W, NW};
constexpr std::array<std::array<int, 2>, 8> kRingOffset = {
    {{0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}}};

double mean9(const Window& w) {
    double s = 0.0;
    for (double v : w) s += v;
    return s / 9.0;
}

double slope_deg(const Window& w, double cs) {
    const double gx = (w[E] - w[W]) / (2.0 * cs);
    const double gy = (w[N] - w[S]) / (2.0 * cs);
    return std::atan(std::hypot(gx, gy)) * kRadToDeg;
}

double aspect_deg(const Window& w, double cs) {
    const double gx = (w[E] - w[W]) / (2.0 * cs);
    const double gy = (w[N] - w[S]) / (2.0 * cs);
    if (std::hypot(gx, gy) < 1e-12) return 0.0;
    double a = std::atan2(gy, -gx) * kRadToDeg;
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a -= 360.0;
    return a;
}

double tri(const Window& w) {
    const double m = mean9(w);
    double ss = 0.0;
    for (double v : w) ss += (v - m) * (v - m);
    return std::sqrt(ss / 9.0);
}

double tpi(const Window& w) {
    double s = 0.0;
    for (int k : kRing) s += w[k];
    return w[C] - s / 8.0;
}

double roughness(const Window& w) {
    double r = 0.0;
    for (int k : kRing) r = std::max(r, std::abs(w[C] - w[k]));
    return r;
}

double ruggedness(const Window& w) {
    auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    return *hi - *lo;
}

// Dispersion of the four directional height differences relative to their
// mean magnitude.
double acv(const Window& w) {
    const std::array<double, 4> d = {w[N] - w[S], w[E] - w[W], w[NE] - w[SW], w[NW] - w[SE]};
    double mean = 0.0, mean_abs = 0.0;
    for (double v : d) {
        mean += v;
        mean_abs += std::abs(v);
    }
    mean /= 4.0;
    mean_abs /= 4.0;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / 4.0);
    return std::log1p(sd / (mean_abs + 1e-9));
}

// 8 triangle facets fanning from the centre; 8 / |sum of unit normals|.
double srf(const Window& w, double cs) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::size_t k = 0; k < 8; ++k) {
        const std::size_t k1 = (k + 1) % 8;
        const Eigen::Vector3d a(kRingOffset[k][0] * cs, kRingOffset[k][1] * cs, w[kRing[k]] - w[C]);
        const Eigen::Vector3d b(kRingOffset[k1][0] * cs, kRingOffset[k1][1] * cs, w[kRing[k1]] - w[C]);
        Eigen::Vector3d n = a.cross(b);
        if (n.z() < 0.0) n = -n;
        sum += n.normalized();
    }
    return 8.0 / sum.norm();
}

double entropy(const Window& w) {
    auto [lo_it, hi_it] = std::minmax_element(w.begin(), w.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (!(range > 0.0)) return 0.0;
    std::array<int, 8> counts{};
    for (double v : w) {
        const int bin = std::min(7, static_cast<int>(std::floor((v - lo) / range * 8.0)));
        ++counts[static_cast<std::size_t>(bin)];
    }
    double h = 0.0;
    for (int c : counts) {
        if (c == 0) continue;
        const double p = c / 9.0;
        h -= p * std::log(p);
    }
    return h;
}

double edginess(const Window& w) {
    const double sx = (w[NE] + 2.0 * w[E] + w[SE]) - (w[NW] + 2.0 * w[W] + w[SW]);
    const double sy = (w[NW] + 2.0 * w[N] + w[NE]) - (w[SW] + 2.0 * w[S] + w[SE]);
    return std::hypot(sx, sy);
}

}  // namespace

std::string_view feature_name(FeatureKind kind) {
    for (const auto& nk : kNames)
        if (nk.kind == kind) return nk.name;
    return "unknown";
}

FeatureKind parse_feature_kind(std::string_view name) {
    const std::string key = text::lower(text::trim(name));
    for (const auto& nk : kNames)
        if (nk.name == key) return nk.kind;
    throw UsageError("unknown feature '" + std::string(name) + "'");
}

std::vector<FeatureKind> parse_feature_list(std::string_view list) {
    std::vector<FeatureKind> kinds;
    for (const auto& item : text::split(list, ',')) {
        const std::string key = text::lower(text::trim(item));
        if (key.empty()) continue;
        if (key == "all") {
            kinds.insert(kinds.end(), kComputedFeatures.begin(), kComputedFeatures.end());
            continue;
        }
        const FeatureKind kind = parse_feature_kind(key);
        if (std::find(kinds.begin(), kinds.end(), kind) != kinds.end())
            throw UsageError("feature '" + key + "' listed twice");
        kinds.push_back(kind);
    }
    if (kinds.empty()) throw UsageError("feature list is empty");
    return kinds;
}

double window_feature(const Window& w, double cellsize, FeatureKind kind) {
    switch (kind) {
        case FeatureKind::Slope: return slope_deg(w, cellsize);
        case FeatureKind::Aspect: return aspect_deg(w, cellsize);
        case FeatureKind::ACV: return acv(w);
        case FeatureKind::TRI: return tri(w);
        case FeatureKind::TPI: return tpi(w);
        case FeatureKind::Roughness: return roughness(w);
        case FeatureKind::Ruggedness: return ruggedness(w);
        case FeatureKind::SRF: return srf(w, cellsize);
        case FeatureKind::Entropy: return entropy(w);
        case FeatureKind::Edginess: return edginess(w);
        case FeatureKind::AuxErrorMap: break;
    }
    throw UsageError("aux error maps are supplied, not computed");
}

Grid compute_feature(const Grid& grid, FeatureKind kind) {
    if (kind == FeatureKind::AuxErrorMap) throw UsageError("aux error maps are supplied, not computed");
    Grid out(grid.header(), grid.nodata());
    const double cs = grid.header().cellsize;
    Window w;
    for (int r = 1; r + 1 < grid.rows(); ++r) {
        for (int c = 1; c + 1 < grid.cols(); ++c) {
            bool ok = true;
            for (int dr = -1; dr <= 1 && ok; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (!grid.valid(r + dr, c + dc)) {
                        ok = false;
                        break;
                    }
                    w[static_cast<std::size_t>((dr + 1) * 3 + (dc + 1))] = grid(r + dr, c + dc);
                }
            if (ok) out(r, c) = window_feature(w, cs, kind);
        }
    }
    return out;
}

FeatureTable FeatureTable::select_rows(const std::vector<Eigen::Index>& rows) const {
    FeatureTable out;
    out.names = names;
    out.ncols = ncols;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), values.cols());
    out.pixel_indices.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.values.row(static_cast<Eigen::Index>(i)) = values.row(rows[i]);
        out.pixel_indices.push_back(pixel_indices[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

std::optional<Eigen::Index> FeatureTable::column(std::string_view name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == name) return static_cast<Eigen::Index>(j);
    return std::nullopt;
}

FeatureTable extract_feature_table(const Grid& height, const Grid* aux, const std::vector<FeatureKind>& kinds) {
    if (kinds.empty()) throw UsageError("no features requested");
    const bool wants_aux = std::find(kinds.begin(), kinds.end(), FeatureKind::AuxErrorMap) != kinds.end();
    if (wants_aux && !aux) throw UsageError("feature 'aux' requested but no aux raster supplied");
    if (!wants_aux && aux) throw UsageError("aux raster supplied but feature 'aux' not requested");
    if (aux) require_same_geometry(height.header(), aux->header(), "extract_feature_table");

    std::vector<Grid> layers;
    layers.reserve(kinds.size());
    for (FeatureKind kind : kinds) layers.push_back(kind == FeatureKind::AuxErrorMap ? *aux : compute_feature(height, kind));

    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < height.size(); ++i) {
        if (!height.valid(i)) continue;
        bool ok = true;
        for (const auto& layer : layers) ok = ok && layer.valid(i);
        if (ok) pixels.push_back(i);
    }

    FeatureTable table;
    table.ncols = height.cols();
    for (FeatureKind kind : kinds) table.names.emplace_back(feature_name(kind));
    table.values.resize(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(kinds.size()));
    for (std::size_t r = 0; r < pixels.size(); ++r)
        for (std::size_t j = 0; j < layers.size(); ++j)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = layers[j][pixels[r]];
    table.pixel_indices = std::move(pixels);
    return table;
}

void write_feature_csv(std::ostream& out, const FeatureTable& table) {
    out << "row,col";
    for (const auto& name : table.names) out << ',' << name;
    out << '\n';
    const auto ncols = static_cast<std::size_t>(std::max(table.ncols, 1));
    for (Eigen::Index i = 0; i < table.rows(); ++i) {
        const std::size_t idx = table.pixel_indices[static_cast<std::size_t>(i)];
        out << idx / ncols << ',' << idx % ncols;
        for (Eigen::Index j = 0; j < table.cols(); ++j) out << ',' << text::significant(table.values(i, j), 9);
        out << '\n';
    }
}

}  // namespace demfuse
