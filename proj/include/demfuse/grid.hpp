#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <string>

namespace demfuse {

/// Geometry of a north-up raster. (xll, yll) is the lower-left corner of the
/// lower-left cell; cell centers sit half a cell inside it.
struct GridHeader {
    int ncols = 1;
    int nrows = 1;
    double xll = 0.0;
    double yll = 0.0;
    double cellsize = 1.0;
    double nodata = -9999.0;

    std::size_t size() const { return static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows); }

    // Map coordinates of a cell center. Row 0 is the northernmost row.
    double center_x(double col) const { return xll + (col + 0.5) * cellsize; }
    double center_y(double row) const { return yll + (nrows - row - 0.5) * cellsize; }

    // Fractional column/row of a map coordinate, in cell-center units.
    double col_of(double x) const { return (x - xll) / cellsize - 0.5; }
    double row_of(double y) const { return nrows - 0.5 - (y - yll) / cellsize; }

    bool operator==(const GridHeader&) const = default;
};

/// Throws UsageError unless ncols, nrows >= 1 and cellsize > 0.
void validate(const GridHeader& header);

/// Same dimensions, origin and cell size (origin/cellsize compared to
/// 1e-9 cell). Nodata sentinels may differ.
bool same_geometry(const GridHeader& a, const GridHeader& b);

/// Throws GeometryError when same_geometry() is false.
void require_same_geometry(const GridHeader& a, const GridHeader& b, const char* what);

using HeightArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Single-band raster: heights, error maps, weights and feature layers all
/// share this container. A cell is "nodata" when it holds the header's
/// sentinel or any non-finite value.
class Grid {
public:
    Grid() = default;
    Grid(const GridHeader& header, double fill);
    Grid(const GridHeader& header, HeightArray values);

    const GridHeader& header() const { return header_; }
    int rows() const { return header_.nrows; }
    int cols() const { return header_.ncols; }
    std::size_t size() const { return header_.size(); }
    double nodata() const { return header_.nodata; }

    double operator()(int row, int col) const { return values_(row, col); }
    double& operator()(int row, int col) { return values_(row, col); }
    double operator[](std::size_t index) const { return values_.data()[index]; }
    double& operator[](std::size_t index) { return values_.data()[index]; }

    bool is_nodata_value(double v) const { return !std::isfinite(v) || v == header_.nodata; }
    bool valid(int row, int col) const { return !is_nodata_value(values_(row, col)); }
    bool valid(std::size_t index) const { return !is_nodata_value(values_.data()[index]); }
    void set_nodata(int row, int col) { values_(row, col) = header_.nodata; }
    void set_nodata(std::size_t index) { values_.data()[index] = header_.nodata; }

    std::size_t valid_count() const;

    const HeightArray& values() const { return values_; }
    HeightArray& values() { return values_; }

    /// Returns a copy where every non-finite value is replaced by the sentinel.
    Grid canonical() const;

private:
    GridHeader header_{};
    HeightArray values_;
};

/// Same geometry and nodata pattern; valid values equal within `tol`.
bool approx_equal(const Grid& a, const Grid& b, double tol);

Grid read_ascii_grid(std::istream& in);
Grid read_ascii_grid_file(const std::string& path);

void write_ascii_grid(std::ostream& out, const Grid& grid);
void write_ascii_grid_file(const std::string& path, const Grid& grid);

/// Bilinear sample at a map coordinate, clamped to the outermost cell
/// centers. Returns NaN when any source cell with nonzero weight is nodata
/// or the point lies outside the grid extent.
double sample_bilinear(const Grid& grid, double x, double y);

/// Resample onto a new cell size. The lower-left origin is kept and
/// partial trailing cells are dropped.
Grid resample_bilinear(const Grid& grid, double target_cellsize);

/// Per-pixel a - b; nodata in either input is nodata in the result.
Grid grid_subtract(const Grid& a, const Grid& b);

}  // namespace demfuse
