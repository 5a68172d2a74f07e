#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slidesurge {

/// Geometry of a georeferenced rectangular raster.
///
/// Conventions used across the library:
///  - (x0, y0) is the *center* of the lower-left cell,
///  - values are stored row-major with the bottom row first
///    (index = j * nx + i with j the row from the south edge),
///  - all lengths are meters.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double nodata = -9999.0;

  std::size_t cell_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double x_of(int i) const { return x0 + i * dx; }
  double y_of(int j) const { return y0 + j * dy; }
  double x_max() const { return x0 + (nx - 1) * dx; }
  double y_max() const { return y0 + (ny - 1) * dy; }
  double cell_area() const { return dx * dy; }

  bool same_geometry(const GridSpec& o) const {
    return nx == o.nx && ny == o.ny && dx == o.dx && dy == o.dy && x0 == o.x0 && y0 == o.y0;
  }

  void validate() const {
    if (nx < 1 || ny < 1)
      throw std::invalid_argument("GridSpec: nx and ny must be >= 1 (got " + std::to_string(nx) +
                                  " x " + std::to_string(ny) + ")");
    if (!(dx > 0.0) || !(dy > 0.0))
      throw std::invalid_argument("GridSpec: dx and dy must be positive (got dx=" +
                                  std::to_string(dx) + ", dy=" + std::to_string(dy) + ")");
    if (!std::isfinite(x0) || !std::isfinite(y0))
      throw std::invalid_argument("GridSpec: origin must be finite");
  }
};

/// A double-valued raster matching a GridSpec.
struct ScalarField {
  GridSpec spec;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& s, double fill = 0.0)
      : spec(s), values(s.cell_count(), fill) {
    spec.validate();
  }

  std::size_t idx(int i, int j) const { return spec.idx(i, j); }
  double& at(int i, int j) { return values[idx(i, j)]; }
  double at(int i, int j) const { return values[idx(i, j)]; }
  bool is_nodata(int i, int j) const { return values[idx(i, j)] == spec.nodata; }

  void check_consistent() const {
    spec.validate();
    if (values.size() != spec.cell_count())
      throw std::invalid_argument("ScalarField: value count " + std::to_string(values.size()) +
                                  " does not match grid " + std::to_string(spec.nx) + " x " +
                                  std::to_string(spec.ny));
  }
};

/// A raster frame tagged with a simulation time in seconds.
struct TimeStampedField {
  double t = 0.0;
  ScalarField field;
};

/// Bilinearly interpolates `f` at (x, y).  The point must lie within the
/// hull of the cell centers (a relative slack of ~1e-9 cells absorbs
/// floating-point noise on the boundary).  NODATA cells participate like
/// ordinary values; callers that care must mask beforehand.
inline double bilinear_sample(const ScalarField& f, double x, double y) {
  const GridSpec& g = f.spec;
  double sx = (x - g.x0) / g.dx;
  double sy = (y - g.y0) / g.dy;
  const double tol = 1e-9;
  if (sx < -tol || sx > g.nx - 1 + tol || sy < -tol || sy > g.ny - 1 + tol)
    throw std::out_of_range("bilinear_sample: point (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") lies outside the cell-center hull");
  sx = std::clamp(sx, 0.0, static_cast<double>(g.nx - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(g.ny - 1));
  int ix = std::min(static_cast<int>(sx), g.nx - 2);
  int iy = std::min(static_cast<int>(sy), g.ny - 2);
  if (g.nx == 1) ix = 0;
  if (g.ny == 1) iy = 0;
  const double fx = g.nx == 1 ? 0.0 : sx - ix;
  const double fy = g.ny == 1 ? 0.0 : sy - iy;
  const int ix1 = g.nx == 1 ? ix : ix + 1;
  const int iy1 = g.ny == 1 ? iy : iy + 1;
  const double v00 = f.at(ix, iy);
  const double v10 = f.at(ix1, iy);
  const double v01 = f.at(ix, iy1);
  const double v11 = f.at(ix1, iy1);
  return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

/// Resamples `src` onto `target` by sampling bilinearly at every target cell
/// center.  Every target center must lie within the source cell-center hull.
/// Resampling onto the identical geometry returns an exact copy.
inline ScalarField resample(const ScalarField& src, const GridSpec& target) {
  src.check_consistent();
  target.validate();
  if (target.same_geometry(src.spec)) {
    ScalarField out = src;
    out.spec = target;  // keep the target's nodata marker
    return out;
  }
  ScalarField out(target, 0.0);
  for (int j = 0; j < target.ny; ++j) {
    const double y = target.y_of(j);
    for (int i = 0; i < target.nx; ++i) {
      out.at(i, j) = bilinear_sample(src, target.x_of(i), y);
    }
  }
  return out;
}

struct FieldStats {
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();
  double integral = 0.0;      // sum(value) * dx * dy over non-NODATA cells
  std::size_t valid_cells = 0;
  std::size_t nodata_cells = 0;
};

/// Min / max / area integral over non-NODATA cells.
inline FieldStats field_stats(const ScalarField& f) {
  f.check_consistent();
  FieldStats s;
  double sum = 0.0;
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    const double v = f.values[k];
    if (v == f.spec.nodata) {
      ++s.nodata_cells;
      continue;
    }
    ++s.valid_cells;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
  }
  s.integral = sum * f.spec.cell_area();
  if (s.valid_cells == 0) {
    s.min = 0.0;
    s.max = 0.0;
  }
  return s;
}

}  // namespace slidesurge
