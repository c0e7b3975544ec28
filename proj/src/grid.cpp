#include "demfuse/grid.hpp"

#include "demfuse/errors.hpp"
#include "text.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace demfuse {

void validate(const GridHeader& header) {
    if (header.ncols < 1 || header.nrows < 1)
        throw UsageError("grid dimensions must be at least 1x1, got " + std::to_string(header.ncols) + "x" +
                         std::to_string(header.nrows));
    if (!(header.cellsize > 0.0) || !std::isfinite(header.cellsize))
        throw UsageError("grid cellsize must be positive");
    if (!std::isfinite(header.xll) || !std::isfinite(header.yll) || !std::isfinite(header.nodata))
        throw UsageError("grid origin and nodata sentinel must be finite");
}

bool same_geometry(const GridHeader& a, const GridHeader& b) {
    if (a.ncols != b.ncols || a.nrows != b.nrows) return false;
    const double tol = 1e-9 * std::max(a.cellsize, b.cellsize);
    return std::abs(a.cellsize - b.cellsize) <= tol && std::abs(a.xll - b.xll) <= tol && std::abs(a.yll - b.yll) <= tol;
}

void require_same_geometry(const GridHeader& a, const GridHeader& b, const char* what) {
    if (!same_geometry(a, b)) throw GeometryError(std::string(what) + ": grid geometries differ");
}

Grid::Grid(const GridHeader& header, double fill) : header_(header) {
    validate(header_);
    values_ = HeightArray::Constant(header_.nrows, header_.ncols, fill);
}

Grid::Grid(const GridHeader& header, HeightArray values) : header_(header), values_(std::move(values)) {
    validate(header_);
    if (values_.rows() != header_.nrows || values_.cols() != header_.ncols)
        throw StructuralError("grid values do not match header dimensions");
}

std::size_t Grid::valid_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += valid(i) ? 1 : 0;
    return n;
}

Grid Grid::canonical() const {
    Grid out = *this;
    for (std::size_t i = 0; i < size(); ++i)
        if (!valid(i)) out.set_nodata(i);
    return out;
}

bool approx_equal(const Grid& a, const Grid& b, double tol) {
    if (!same_geometry(a.header(), b.header())) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.valid(i) != b.valid(i)) return false;
        if (a.valid(i) && std::abs(a[i] - b[i]) > tol) return false;
    }
    return true;
}

namespace {

constexpr std::array<const char*, 6> kHeaderKeys = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize",
                                                    "nodata_value"};

}  // namespace

Grid read_ascii_grid(std::istream& in) {
    GridHeader header;
    std::array<bool, 6> seen{};
    std::string line;
    int line_no = 0;
    for (std::size_t k = 0; k < kHeaderKeys.size(); ++k) {
        if (!std::getline(in, line)) throw ParseError("grid header truncated: missing " + std::string(kHeaderKeys[k]));
        ++line_no;
        auto toks = text::tokens(line);
        if (toks.empty()) {
            --k;
            continue;
        }
        const std::string key = text::lower(toks[0]);
        auto it = std::find(kHeaderKeys.begin(), kHeaderKeys.end(), key);
        if (it == kHeaderKeys.end())
            throw ParseError("grid header line " + std::to_string(line_no) + ": unknown key '" + toks[0] + "'");
        const auto idx = static_cast<std::size_t>(it - kHeaderKeys.begin());
        if (toks.size() != 2) throw ParseError("grid header key '" + toks[0] + "': expected exactly one value");
        if (seen[idx]) throw ParseError("grid header key '" + toks[0] + "' repeated");
        seen[idx] = true;
        if (idx < 2) {
            auto v = text::parse_int(toks[1]);
            if (!v || *v < 1 || *v > std::numeric_limits<int>::max())
                throw ParseError("grid header key '" + toks[0] + "': invalid value '" + toks[1] + "'");
            (idx == 0 ? header.ncols : header.nrows) = static_cast<int>(*v);
        } else {
            auto v = text::parse_double(toks[1]);
            if (!v || !std::isfinite(*v))
                throw ParseError("grid header key '" + toks[0] + "': invalid value '" + toks[1] + "'");
            switch (idx) {
                case 2: header.xll = *v; break;
                case 3: header.yll = *v; break;
                case 4: header.cellsize = *v; break;
                default: header.nodata = *v; break;
            }
        }
    }
    if (!(header.cellsize > 0.0)) throw ParseError("grid header key 'cellsize': must be positive");

    HeightArray values(header.nrows, header.ncols);
    int row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto toks = text::tokens(line);
        if (toks.empty()) continue;
        if (row >= header.nrows)
            throw StructuralError("grid has more than nrows=" + std::to_string(header.nrows) + " value rows");
        if (static_cast<int>(toks.size()) != header.ncols)
            throw StructuralError("grid row " + std::to_string(row) + " has " + std::to_string(toks.size()) +
                                  " values, header says ncols=" + std::to_string(header.ncols));
        for (int c = 0; c < header.ncols; ++c) {
            auto v = text::parse_double(toks[static_cast<std::size_t>(c)]);
            if (!v) throw ParseError("grid line " + std::to_string(line_no) + ": bad value '" + toks[c] + "'");
            values(row, c) = *v;
        }
        ++row;
    }
    if (row != header.nrows)
        throw StructuralError("grid has " + std::to_string(row) + " value rows, header says nrows=" +
                              std::to_string(header.nrows));
    return Grid(header, std::move(values));
}

Grid read_ascii_grid_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open grid file '" + path + "'");
    return read_ascii_grid(in);
}

void write_ascii_grid(std::ostream& out, const Grid& grid) {
    const auto& h = grid.header();
    out << "ncols " << h.ncols << '\n'
        << "nrows " << h.nrows << '\n'
        << "xllcorner " << text::shortest(h.xll) << '\n'
        << "yllcorner " << text::shortest(h.yll) << '\n'
        << "cellsize " << text::shortest(h.cellsize) << '\n'
        << "NODATA_value " << text::shortest(h.nodata) << '\n';
    const std::string sentinel = text::shortest(h.nodata);
    std::string row;
    for (int r = 0; r < h.nrows; ++r) {
        row.clear();
        for (int c = 0; c < h.ncols; ++c) {
            if (c) row += ' ';
            row += grid.valid(r, c) ? text::shortest(grid(r, c)) : sentinel;
        }
        out << row << '\n';
    }
}

void write_ascii_grid_file(const std::string& path, const Grid& grid) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write grid file '" + path + "'");
    write_ascii_grid(out, grid);
    if (!out) throw Error("I/O failure writing '" + path + "'");
}

namespace {

// Snap fractional indices that are within rounding noise of an integer, so
// that sampling exactly at a cell center touches only that cell.
void split_index(double f, int n, int& i0, int& i1, double& t) {
    f = std::clamp(f, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(f));
    t = f - i0;
    if (t > 1.0 - 1e-9) {
        ++i0;
        t = 0.0;
    } else if (t < 1e-9) {
        t = 0.0;
    }
    i0 = std::min(i0, n - 1);
    i1 = std::min(i0 + 1, n - 1);
}

}  // namespace

double sample_bilinear(const Grid& grid, double x, double y) {
    const auto& h = grid.header();
    const double fc = h.col_of(x);
    const double fr = h.row_of(y);
    const double eps = 1e-9;
    if (fc < -0.5 - eps || fc > h.ncols - 0.5 + eps || fr < -0.5 - eps || fr > h.nrows - 0.5 + eps)
        return std::numeric_limits<double>::quiet_NaN();

    int c0, c1, r0, r1;
    double tx, ty;
    split_index(fc, h.ncols, c0, c1, tx);
    split_index(fr, h.nrows, r0, r1, ty);

    const std::array<int, 4> rr = {r0, r0, r1, r1};
    const std::array<int, 4> cc = {c0, c1, c0, c1};
    const std::array<double, 4> w = {(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx};
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.0) continue;
        if (!grid.valid(rr[k], cc[k])) return std::numeric_limits<double>::quiet_NaN();
        acc += w[k] * grid(rr[k], cc[k]);
    }
    return acc;
}

Grid resample_bilinear(const Grid& grid, double target_cellsize) {
    if (!(target_cellsize > 0.0)) throw UsageError("target cellsize must be positive");
    const auto& src = grid.header();
    const double ratio = src.cellsize / target_cellsize;
    GridHeader dst = src;
    dst.cellsize = target_cellsize;
    dst.ncols = static_cast<int>(std::floor(src.ncols * ratio + 1e-9));
    dst.nrows = static_cast<int>(std::floor(src.nrows * ratio + 1e-9));
    if (dst.ncols < 1 || dst.nrows < 1) throw UsageError("resampled grid would have fewer than one cell");

    Grid out(dst, dst.nodata);
    for (int r = 0; r < dst.nrows; ++r)
        for (int c = 0; c < dst.ncols; ++c) {
            const double v = sample_bilinear(grid, dst.center_x(c), dst.center_y(r));
            out(r, c) = std::isfinite(v) ? v : dst.nodata;
        }
    return out;
}

Grid grid_subtract(const Grid& a, const Grid& b) {
    require_same_geometry(a.header(), b.header(), "grid_subtract");
    Grid out(a.header(), a.nodata());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a.valid(i) && b.valid(i)) out[i] = a[i] - b[i];
    return out;
}

}  // namespace demfuse
