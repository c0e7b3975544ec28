#include "demfuse/fusion.hpp"

#include "demfuse/errors.hpp"
#include "text.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace demfuse {

WeightScheme parse_weight_scheme(std::string_view name) {
    const std::string key = text::lower(text::trim(name));
    if (key == "inverse-square") return WeightScheme::InverseSquare;
    if (key == "one-minus-norm") return WeightScheme::OneMinusNorm;
    throw UsageError("unknown weighting scheme '" + std::string(name) + "' (inverse-square | one-minus-norm)");
}

std::string_view weight_scheme_name(WeightScheme scheme) {
    return scheme == WeightScheme::InverseSquare ? "inverse-square" : "one-minus-norm";
}

Grid weights_inverse_square(const Grid& errors, double floor) {
    if (!(floor > 0.0)) throw UsageError("error floor must be positive");
    Grid out(errors.header(), errors.nodata());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors.valid(i)) continue;
        const double e = std::max(errors[i], floor);
        out[i] = 1.0 / (e * e);
    }
    return out;
}

bool has_error_spread(const Grid& errors) {
    bool seen = false;
    double first = 0.0;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors.valid(i)) continue;
        if (!seen) {
            first = errors[i];
            seen = true;
        } else if (errors[i] != first) {
            return true;
        }
    }
    return false;
}

Grid weights_one_minus_norm(const Grid& errors) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (errors.valid(i)) lo = std::min(lo, errors[i]), hi = std::max(hi, errors[i]);

    Grid out(errors.header(), errors.nodata());
    const double span = hi - lo;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors.valid(i)) continue;
        out[i] = span > 0.0 ? 1.0 - (errors[i] - lo) / span : 1.0;
    }
    return out;
}

Grid error_weights(const Grid& errors, WeightScheme scheme, double floor) {
    return scheme == WeightScheme::InverseSquare ? weights_inverse_square(errors, floor) : weights_one_minus_norm(errors);
}

WeightPair normalize_pair(const Grid& raw_a, const Grid& raw_b) {
    require_same_geometry(raw_a.header(), raw_b.header(), "normalize_pair");
    WeightPair w{Grid(raw_a.header(), raw_a.nodata()), Grid(raw_a.header(), raw_a.nodata())};
    for (std::size_t i = 0; i < raw_a.size(); ++i) {
        const bool va = raw_a.valid(i), vb = raw_b.valid(i);
        if (va && vb) {
            if (raw_a[i] < 0.0 || raw_b[i] < 0.0) throw UsageError("normalize_pair: negative raw weight");
            const double sum = raw_a[i] + raw_b[i];
            if (sum > 0.0) {
                w.w_a[i] = raw_a[i] / sum;
                w.w_b[i] = raw_b[i] / sum;
            } else {
                w.w_a[i] = 0.5;
                w.w_b[i] = 0.5;
            }
        } else if (va || vb) {
            w.w_a[i] = va ? 1.0 : 0.0;
            w.w_b[i] = va ? 0.0 : 1.0;
        }
    }
    return w;
}

Grid fuse_weighted(const Grid& d_a, const Grid& d_b, const WeightPair& weights) {
    require_same_geometry(d_a.header(), d_b.header(), "fuse_weighted");
    require_same_geometry(d_a.header(), weights.w_a.header(), "fuse_weighted");
    require_same_geometry(d_a.header(), weights.w_b.header(), "fuse_weighted");
    Grid out(d_a.header(), d_a.nodata());
    for (std::size_t i = 0; i < d_a.size(); ++i) {
        const bool va = d_a.valid(i), vb = d_b.valid(i);
        if (va && vb) {
            if (weights.w_a.valid(i) && weights.w_b.valid(i))
                out[i] = weights.w_a[i] * d_a[i] + weights.w_b[i] * d_b[i];
            else
                out[i] = 0.5 * d_a[i] + 0.5 * d_b[i];
        } else if (va) {
            out[i] = d_a[i];
        } else if (vb) {
            out[i] = d_b[i];
        }
    }
    return out;
}

Grid fuse_with_error_maps(const Grid& d_a, const Grid& d_b, const Grid& err_a, const Grid& err_b, WeightScheme scheme,
                          double floor) {
    require_same_geometry(d_a.header(), err_a.header(), "fuse_with_error_maps");
    require_same_geometry(d_b.header(), err_b.header(), "fuse_with_error_maps");
    return fuse_weighted(d_a, d_b, normalize_pair(error_weights(err_a, scheme, floor), error_weights(err_b, scheme, floor)));
}

Grid fuse_hem_baseline(const Grid& d_a, const Grid& d_b, const Grid& hem_a, const Grid& hem_b, WeightScheme scheme,
                       double floor) {
    return fuse_with_error_maps(d_a, d_b, hem_a, hem_b, scheme, floor);
}

Grid fuse_plain_average(const Grid& d_a, const Grid& d_b) {
    require_same_geometry(d_a.header(), d_b.header(), "fuse_plain_average");
    Grid half(d_a.header(), 0.5);
    return fuse_weighted(d_a, d_b, WeightPair{half, half});
}

Grid substitute_by_mask(const Grid& d_a, const Grid& d_b, const Grid& mask) {
    require_same_geometry(d_a.header(), d_b.header(), "substitute_by_mask");
    require_same_geometry(d_a.header(), mask.header(), "substitute_by_mask");
    Grid out = d_a;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.valid(i)) continue;
        if (mask[i] == 1.0) {
            out[i] = d_b.valid(i) ? d_b[i] : out.nodata();
        } else if (mask[i] != 0.0) {
            throw UsageError("substitution mask values must be 0, 1 or nodata");
        }
    }
    return out;
}

}  // namespace demfuse
