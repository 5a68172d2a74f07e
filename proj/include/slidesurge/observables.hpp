#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidesurge/esri_ascii.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/swe.hpp"

namespace slidesurge {

struct Gauge {
  int id = 0;
  double x = 0.0;
  double y = 0.0;
};

struct GaugeSample {
  double t = 0.0;
  double eta = 0.0;  // free surface (bed elevation when dry)
  double h = 0.0;
  double u = 0.0;
  double v = 0.0;
  bool dry = false;
};

struct GaugeSeries {
  Gauge gauge;
  std::vector<GaugeSample> samples;
};

/// Validates that every gauge sits inside the grid's cell-center hull.
inline void check_gauges(const std::vector<Gauge>& gauges, const GridSpec& g) {
  for (const auto& p : gauges) {
    if (p.x < g.x0 || p.x > g.x_max() || p.y < g.y0 || p.y > g.y_max())
      throw std::invalid_argument("gauge " + std::to_string(p.id) + " at (" + std::to_string(p.x) +
                                  ", " + std::to_string(p.y) + ") lies outside the grid");
  }
}

/// Samples the state at each gauge.  Interpolation is bilinear restricted to
/// the wet subset of the four surrounding cells; with no wet support the
/// sample is flagged dry and reports the bed elevation.
inline std::vector<GaugeSample> sample_gauges(const WaterState& s, const SWEConfig& cfg,
                                              const std::vector<Gauge>& gauges) {
  const GridSpec& g = s.spec;
  std::vector<GaugeSample> out;
  out.reserve(gauges.size());
  for (const auto& p : gauges) {
    const double sx = std::clamp((p.x - g.x0) / g.dx, 0.0, static_cast<double>(g.nx - 1));
    const double sy = std::clamp((p.y - g.y0) / g.dy, 0.0, static_cast<double>(g.ny - 1));
    const int ix = std::min(static_cast<int>(sx), std::max(0, g.nx - 2));
    const int iy = std::min(static_cast<int>(sy), std::max(0, g.ny - 2));
    const double fx = g.nx == 1 ? 0.0 : sx - ix;
    const double fy = g.ny == 1 ? 0.0 : sy - iy;
    const int ix1 = std::min(ix + 1, g.nx - 1);
    const int iy1 = std::min(iy + 1, g.ny - 1);

    const int ci[4] = {ix, ix1, ix, ix1};
    const int cj[4] = {iy, iy, iy1, iy1};
    const double w[4] = {(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy};

    GaugeSample smp;
    smp.t = s.t;
    double wsum = 0.0, eta = 0.0, h = 0.0, hu = 0.0, hv = 0.0;
    for (int c = 0; c < 4; ++c) {
      const std::size_t k = static_cast<std::size_t>(cj[c]) * g.nx + ci[c];
      if (s.h[k] >= cfg.h_dry) {
        wsum += w[c];
        eta += w[c] * (s.h[k] + s.bed[k]);
        h += w[c] * s.h[k];
        hu += w[c] * s.hu[k];
        hv += w[c] * s.hv[k];
      }
    }
    if (wsum > 0.0) {
      smp.eta = eta / wsum;
      smp.h = h / wsum;
      const double hs = smp.h;
      smp.u = hs >= cfg.h_dry ? (hu / wsum) / hs : 0.0;
      smp.v = hs >= cfg.h_dry ? (hv / wsum) / hs : 0.0;
      smp.dry = false;
    } else {
      double bed = 0.0;
      for (int c = 0; c < 4; ++c)
        bed += w[c] * s.bed[static_cast<std::size_t>(cj[c]) * g.nx + ci[c]];
      smp.eta = bed;
      smp.h = 0.0;
      smp.u = 0.0;
      smp.v = 0.0;
      smp.dry = true;
    }
    out.push_back(smp);
  }
  return out;
}

/// Running maxima of surface anomaly and speed, plus first-arrival times.
struct MaxFields {
  double datum = 0.0;
  double threshold = 0.01;  // arrival detection threshold, m
  ScalarField max_eta;      // max |eta - datum| on wet cells, m
  ScalarField max_speed;    // max |u|, m/s
  ScalarField arrival;      // first time |eta - datum| > threshold; NODATA if never
};

inline MaxFields init_max_fields(const GridSpec& spec, double datum, double threshold = 0.01) {
  if (!(threshold > 0.0)) throw std::invalid_argument("init_max_fields: threshold must be > 0");
  MaxFields m;
  m.datum = datum;
  m.threshold = threshold;
  m.max_eta = ScalarField(spec, 0.0);
  m.max_speed = ScalarField(spec, 0.0);
  m.arrival = ScalarField(spec, spec.nodata);
  return m;
}

/// Pointwise max update from one state; idempotent over repeated states.
inline void update_max_fields(MaxFields& m, const WaterState& s, const SWEConfig& cfg) {
  if (!m.max_eta.spec.same_geometry(s.spec))
    throw std::invalid_argument("update_max_fields: grid mismatch");
  const std::size_t n = s.h.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (s.h[k] < cfg.h_dry) continue;
    const double anomaly = std::abs(s.h[k] + s.bed[k] - m.datum);
    if (anomaly > m.max_eta.values[k]) m.max_eta.values[k] = anomaly;
    const double speed = std::hypot(s.hu[k], s.hv[k]) / s.h[k];
    if (speed > m.max_speed.values[k]) m.max_speed.values[k] = speed;
    if (m.arrival.values[k] == m.arrival.spec.nodata && anomaly > m.threshold)
      m.arrival.values[k] = s.t;
  }
}

/// Tracks which cells have ever been wet (h >= h_dry at any visited state).
struct WetMask {
  GridSpec spec;
  std::vector<std::uint8_t> ever_wet;

  explicit WetMask(const GridSpec& g) : spec(g), ever_wet(g.cell_count(), 0) {}
  void update(const WaterState& s, const SWEConfig& cfg) {
    for (std::size_t k = 0; k < s.h.size(); ++k)
      if (s.h[k] >= cfg.h_dry) ever_wet[k] = 1;
  }
};

struct RunupReport {
  double max_runup_height = 0.0;    // max surface anomaly on newly wetted cells, m
  double max_runup_distance = 0.0;  // m from a newly wetted cell to the initial shoreline
  double inundated_area = 0.0;      // m^2 of newly wetted cells
};

/// Runup metrics over cells that were dry at t = 0 and became wet.
inline RunupReport inundation_metrics(const WaterState& initial, const MaxFields& max,
                                      const WetMask& wet, const SWEConfig& cfg) {
  if (!initial.spec.same_geometry(wet.spec) || !initial.spec.same_geometry(max.max_eta.spec))
    throw std::invalid_argument("inundation_metrics: grid mismatch");
  const GridSpec& g = initial.spec;
  RunupReport rep;

  std::vector<std::uint8_t> wet0(g.cell_count());
  for (std::size_t k = 0; k < wet0.size(); ++k) wet0[k] = initial.h[k] >= cfg.h_dry ? 1 : 0;

  // initial shoreline: initially wet cells with a dry 4-neighbour
  std::vector<std::pair<double, double>> shoreline;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * g.nx + i;
      if (!wet0[k]) continue;
      const bool edge = (i > 0 && !wet0[k - 1]) || (i + 1 < g.nx && !wet0[k + 1]) ||
                        (j > 0 && !wet0[k - g.nx]) || (j + 1 < g.ny && !wet0[k + g.nx]);
      if (edge) shoreline.emplace_back(g.x_of(i), g.y_of(j));
    }
  }

  std::size_t newly = 0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = static_cast<std::size_t>(j) * g.nx + i;
      if (wet0[k] || !wet.ever_wet[k]) continue;
      ++newly;
      rep.max_runup_height = std::max(rep.max_runup_height, max.max_eta.values[k]);
      if (!shoreline.empty()) {
        const double x = g.x_of(i), y = g.y_of(j);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& sp : shoreline)
          best = std::min(best, (x - sp.first) * (x - sp.first) + (y - sp.second) * (y - sp.second));
        rep.max_runup_distance = std::max(rep.max_runup_distance, std::sqrt(best));
      }
    }
  }
  rep.inundated_area = static_cast<double>(newly) * g.cell_area();
  return rep;
}

/// CSV with the pinned header t,eta,h,u,v (one row per sample).
inline void write_gauge_csv(const GaugeSeries& series, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_gauge_csv: cannot open '" + path + "'");
  out << "t,eta,h,u,v\n";
  for (const auto& s : series.samples) {
    out << format_double(s.t) << ',' << format_double(s.eta) << ',' << format_double(s.h) << ','
        << format_double(s.u) << ',' << format_double(s.v) << '\n';
  }
  if (!out) throw std::runtime_error("write_gauge_csv: write to '" + path + "' failed");
}

/// Max/arrival grids as ESRI ASCII files under `dir`.
inline void write_max_fields(const MaxFields& m, const std::string& dir) {
  write_esri_ascii(dir + "/max_eta.asc", m.max_eta);
  write_esri_ascii(dir + "/max_speed.asc", m.max_speed);
  write_esri_ascii(dir + "/arrival_time.asc", m.arrival);
}

/// Flat key=value report.
inline void write_runup_report(const RunupReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_runup_report: cannot open '" + path + "'");
  out << "max_runup_height=" << format_double(r.max_runup_height) << "\n";
  out << "max_runup_distance=" << format_double(r.max_runup_distance) << "\n";
  out << "inundated_area=" << format_double(r.inundated_area) << "\n";
  if (!out) throw std::runtime_error("write_runup_report: write failed");
}

}  // namespace slidesurge
