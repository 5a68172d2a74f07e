#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidesurge/faults.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/parallel.hpp"

namespace slidesurge {

struct SWEConfig {
  double g = 9.81;        // gravitational acceleration, m/s^2
  double cfl = 0.9;       // Courant number
  double h_dry = 1e-3;    // dry tolerance, m
  double datum = 0.0;     // still-water surface elevation, m
  double t_end = 0.0;     // s
  double manning_n = 0.0; // optional bottom friction; 0 disables
  bool debug_checks = false;  // per-step NaN/Inf scan

  void validate() const {
    if (!(g > 0.0)) throw std::invalid_argument("SWEConfig: g must be > 0");
    if (!(cfl > 0.0) || !(cfl < 1.0))
      throw std::invalid_argument("SWEConfig: cfl must lie in (0, 1), got " + std::to_string(cfl));
    if (!(h_dry > 0.0)) throw std::invalid_argument("SWEConfig: h_dry must be > 0");
    if (manning_n < 0.0) throw std::invalid_argument("SWEConfig: manning_n must be >= 0");
    if (!std::isfinite(datum)) throw std::invalid_argument("SWEConfig: datum must be finite");
  }
};

/// Conserved water state: depth h and momenta hu, hv over bed elevation.
/// Cells with h < h_dry carry zero momentum; the free surface eta = h + bed
/// is meaningful on wet cells only.
struct WaterState {
  GridSpec spec;
  std::vector<double> h, hu, hv, bed;
  double t = 0.0;

  double eta(int i, int j) const {
    const std::size_t k = static_cast<std::size_t>(j) * spec.nx + i;
    return h[k] + bed[k];
  }
};

/// Lake-at-rest initial condition: h = max(0, datum - bed), still water.
inline WaterState init_water_state(const ScalarField& bed, const SWEConfig& cfg) {
  bed.check_consistent();
  cfg.validate();
  WaterState s;
  s.spec = bed.spec;
  s.bed = bed.values;
  const std::size_t n = bed.values.size();
  s.h.resize(n);
  s.hu.assign(n, 0.0);
  s.hv.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) s.h[k] = std::max(0.0, cfg.datum - bed.values[k]);
  s.t = 0.0;
  return s;
}

/// Interface flux with per-side hydrostatic pressure corrections.
/// left[] is the flux the left cell subtracts at this face, right[] the one
/// the right cell adds; they differ only in the momentum component.
struct FaceFlux {
  double left[3];
  double right[3];
  double s_l = 0.0;
  double s_r = 0.0;
};

/// HLLE approximate Riemann flux across a bed jump, using hydrostatic
/// reconstruction of the depths against max(bL, bR) for well-balancing and
/// Einfeldt speed estimates with wet/dry limits.  Inputs are conserved
/// values with `u` the face-normal and `v` the transverse velocity
/// direction.  A face whose two sides are both stationary returns the exact
/// hydrostatic flux, so lake-at-rest states are fixed points bit-for-bit.
inline FaceFlux swe_interface_flux(double hL, double huL, double hvL, double bL,
                                   double hR, double huR, double hvR, double bR,
                                   const SWEConfig& cfg) {
  const double g = cfg.g;
  const double bmax = std::max(bL, bR);
  const double hLs = std::max(0.0, (hL + bL) - bmax);
  const double hRs = std::max(0.0, (hR + bR) - bmax);

  FaceFlux out;
  double F0 = 0.0, F1 = 0.0, F2 = 0.0;

  if (huL == 0.0 && huR == 0.0 && hvL == 0.0 && hvR == 0.0 && hLs == hRs) {
    // Both sides at rest with equal reconstructed depth: the exact flux is
    // purely hydrostatic.  Evaluating it directly (instead of via the HLLE
    // average) keeps rest states steady to the last bit.
    F1 = 0.5 * g * hLs * hLs;
  } else {
    const double uL = hL >= cfg.h_dry ? huL / hL : 0.0;
    const double vL = hL >= cfg.h_dry ? hvL / hL : 0.0;
    const double uR = hR >= cfg.h_dry ? huR / hR : 0.0;
    const double vR = hR >= cfg.h_dry ? hvR / hR : 0.0;
    const double cL = std::sqrt(g * hLs);
    const double cR = std::sqrt(g * hRs);

    if (hLs <= 0.0 && hRs <= 0.0) {
      // both sides dry after reconstruction: nothing moves
    } else if (hRs <= 0.0) {
      // Wet left, dry right: the exact solution is a rarefaction fan whose
      // tip runs at uL + 2cL.  An HLLE average over the fan span dilutes the
      // tip momentum and measurably slows the advancing front, so evaluate
      // the fan state at the face directly.
      out.s_l = uL - cL;
      out.s_r = uL + 2.0 * cL;
      if (uL - cL >= 0.0) {  // fan fully downstream of the face: upwind flux
        const double qL1 = hLs * uL;
        F0 = qL1;
        F1 = qL1 * uL + 0.5 * g * hLs * hLs;
        F2 = qL1 * vL;
      } else if (uL + 2.0 * cL > 0.0) {  // face inside the fan
        const double us = (uL + 2.0 * cL) / 3.0;
        const double hs = us * us / g;
        F0 = hs * us;
        F1 = F0 * us + 0.5 * g * hs * hs;
        F2 = F0 * vL;
      }  // else the water is retreating: the face stays dry
    } else if (hLs <= 0.0) {
      // Dry left, wet right: mirror image of the case above.
      out.s_l = uR - 2.0 * cR;
      out.s_r = uR + cR;
      if (uR + cR <= 0.0) {
        const double qR1 = hRs * uR;
        F0 = qR1;
        F1 = qR1 * uR + 0.5 * g * hRs * hRs;
        F2 = qR1 * vR;
      } else if (uR - 2.0 * cR < 0.0) {
        const double us = (uR - 2.0 * cR) / 3.0;
        const double hs = us * us / g;
        F0 = hs * us;
        F1 = F0 * us + 0.5 * g * hs * hs;
        F2 = F0 * vR;
      }
    } else {
      const double wL = std::sqrt(hLs);
      const double wR = std::sqrt(hRs);
      const double ur = (wL * uL + wR * uR) / (wL + wR);
      const double cr = std::sqrt(0.5 * g * (hLs + hRs));
      const double sl = std::min(uL - cL, ur - cr);
      const double sr = std::max(uR + cR, ur + cr);
      const double qL0 = hLs, qL1 = hLs * uL, qL2 = hLs * vL;
      const double qR0 = hRs, qR1 = hRs * uR, qR2 = hRs * vR;
      const double pL = 0.5 * g * hLs * hLs;
      const double pR = 0.5 * g * hRs * hRs;
      const double FL0 = qL1, FL1 = qL1 * uL + pL, FL2 = qL1 * vL;
      const double FR0 = qR1, FR1 = qR1 * uR + pR, FR2 = qR1 * vR;
      if (sl >= 0.0) {
        F0 = FL0; F1 = FL1; F2 = FL2;
      } else if (sr <= 0.0) {
        F0 = FR0; F1 = FR1; F2 = FR2;
      } else {
        const double prod = sl * sr;
        const double den = sr - sl;
        F0 = ((sr * FL0 - sl * FR0) + prod * (qR0 - qL0)) / den;
        F1 = ((sr * FL1 - sl * FR1) + prod * (qR1 - qL1)) / den;
        F2 = ((sr * FL2 - sl * FR2) + prod * (qR2 - qL2)) / den;
      }
      out.s_l = sl;
      out.s_r = sr;
    }
  }

  // Per-side momentum flux: the cell's own hydrostatic pressure plus the
  // deviation of the face flux from the reconstructed hydrostatic pressure.
  // Written in this form the two faces of a resting cell carry identical
  // momentum fluxes, cancelling exactly.
  out.left[0] = F0;
  out.left[1] = 0.5 * g * hL * hL + (F1 - 0.5 * g * hLs * hLs);
  out.left[2] = F2;
  out.right[0] = F0;
  out.right[1] = 0.5 * g * hR * hR + (F1 - 0.5 * g * hRs * hRs);
  out.right[2] = F2;
  return out;
}

/// Largest stable step: cfl * min over wet cells of min(dx,dy)/(|u| + c).
/// Empty when every cell is dry (quiescent).
inline std::optional<double> compute_swe_timestep(const WaterState& s, const SWEConfig& cfg,
                                                  ThreadPool* pool = nullptr) {
  cfg.validate();
  const double cell = std::min(s.spec.dx, s.spec.dy);
  const double inf = std::numeric_limits<double>::infinity();
  const double m = ordered_row_reduce(
      pool, s.spec.ny, inf,
      [&](int j) {
        double best = inf;
        const int nx = s.spec.nx;
        const int ny = s.spec.ny;
        const std::size_t row = static_cast<std::size_t>(j) * nx;
        for (int i = 0; i < nx; ++i) {
          const double h = s.h[row + i];
          if (h < cfg.h_dry) continue;
          const double u = s.hu[row + i] / h;
          const double v = s.hv[row + i] / h;
          const double c = std::sqrt(cfg.g * h);
          // A front advancing into dry ground signals at |u| + 2c (the
          // rarefaction tip), not |u| + c; without the stronger bound the
          // timestep lets the front outrun its own one-cell-per-step reach.
          const bool dry_edge =
              (i > 0 && s.h[row + i - 1] < cfg.h_dry) ||
              (i + 1 < nx && s.h[row + i + 1] < cfg.h_dry) ||
              (j > 0 && s.h[row - nx + i] < cfg.h_dry) ||
              (j + 1 < ny && s.h[row + nx + i] < cfg.h_dry);
          const double lambda = std::hypot(u, v) + (dry_edge ? 2.0 : 1.0) * c;
          best = std::min(best, cell / lambda);
        }
        return best;
      },
      [](double a, double b) { return std::min(a, b); });
  if (m == inf) return std::nullopt;
  return cfg.cfl * m;
}

namespace detail {

struct SweScratch {
  std::vector<double> h1, hu1, hv1;   // state after the x sweep
  std::vector<double> face;           // y-face fluxes, 6 doubles per face

  void prepare(const GridSpec& g) {
    const std::size_t n = g.cell_count();
    h1.resize(n);
    hu1.resize(n);
    hv1.resize(n);
    face.resize(static_cast<std::size_t>(g.ny + 1) * g.nx * 6);
  }
};

inline void swe_sweep_x(const WaterState& in, const SWEConfig& cfg, double dt,
                        std::vector<double>& h1, std::vector<double>& hu1,
                        std::vector<double>& hv1, ThreadPool* pool) {
  const GridSpec& g = in.spec;
  const double r = dt / g.dx;
  parallel_rows(pool, g.ny, [&](int j) {
    const std::size_t row = static_cast<std::size_t>(j) * g.nx;
    const double* h = in.h.data() + row;
    const double* hu = in.hu.data() + row;
    const double* hv = in.hv.data() + row;
    const double* b = in.bed.data() + row;
    // Wall boundaries: ghost cells mirror the edge cell with the normal
    // momentum negated.
    FaceFlux prev = swe_interface_flux(h[0], -hu[0], hv[0], b[0],
                                       h[0], hu[0], hv[0], b[0], cfg);
    for (int i = 0; i < g.nx; ++i) {
      FaceFlux next =
          i + 1 < g.nx
              ? swe_interface_flux(h[i], hu[i], hv[i], b[i],
                                   h[i + 1], hu[i + 1], hv[i + 1], b[i + 1], cfg)
              : swe_interface_flux(h[i], hu[i], hv[i], b[i],
                                   h[i], -hu[i], hv[i], b[i], cfg);
      h1[row + i] = h[i] - r * (next.left[0] - prev.right[0]);
      hu1[row + i] = hu[i] - r * (next.left[1] - prev.right[1]);
      hv1[row + i] = hv[i] - r * (next.left[2] - prev.right[2]);
      prev = next;
    }
  });
}

inline void swe_sweep_y(const GridSpec& g, const std::vector<double>& h,
                        const std::vector<double>& hu, const std::vector<double>& hv,
                        const std::vector<double>& bed, const SWEConfig& cfg, double dt,
                        std::vector<double>& face, WaterState& out, ThreadPool* pool) {
  const double r = dt / g.dy;
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  // Pass 1: one flux per horizontal face row (k between cell rows k-1 and k).
  // The face-normal velocity is v; u rides along as the transverse component.
  parallel_rows(pool, g.ny + 1, [&](int k) {
    double* f = face.data() + static_cast<std::size_t>(k) * nx * 6;
    const std::size_t rowS = static_cast<std::size_t>(k > 0 ? k - 1 : 0) * nx;
    const std::size_t rowN = static_cast<std::size_t>(k < g.ny ? k : g.ny - 1) * nx;
    const bool south_wall = (k == 0);
    const bool north_wall = (k == g.ny);
    for (std::size_t i = 0; i < nx; ++i) {
      const double hS = h[rowS + i], huS = hu[rowS + i], hvS = hv[rowS + i], bS = bed[rowS + i];
      const double hN = h[rowN + i], huN = hu[rowN + i], hvN = hv[rowN + i], bN = bed[rowN + i];
      FaceFlux ff;
      if (south_wall) {
        ff = swe_interface_flux(hN, -hvN, huN, bN, hN, hvN, huN, bN, cfg);
      } else if (north_wall) {
        ff = swe_interface_flux(hS, hvS, huS, bS, hS, -hvS, huS, bS, cfg);
      } else {
        ff = swe_interface_flux(hS, hvS, huS, bS, hN, hvN, huN, bN, cfg);
      }
      double* c = f + i * 6;
      c[0] = ff.left[0];
      c[1] = ff.left[1];
      c[2] = ff.left[2];
      c[3] = ff.right[0];
      c[4] = ff.right[1];
      c[5] = ff.right[2];
    }
  });
  // Pass 2: update each cell row from its two face rows.
  parallel_rows(pool, g.ny, [&](int j) {
    const std::size_t row = static_cast<std::size_t>(j) * nx;
    const double* fs = face.data() + static_cast<std::size_t>(j) * nx * 6;      // south faces
    const double* fn = face.data() + static_cast<std::size_t>(j + 1) * nx * 6;  // north faces
    for (std::size_t i = 0; i < nx; ++i) {
      const double* cs = fs + i * 6;
      const double* cn = fn + i * 6;
      out.h[row + i] = h[row + i] - r * (cn[0] - cs[3]);
      // normal component of the y flux acts on hv, transverse on hu
      out.hv[row + i] = hv[row + i] - r * (cn[1] - cs[4]);
      out.hu[row + i] = hu[row + i] - r * (cn[2] - cs[5]);
    }
  });
}

}  // namespace detail

/// One explicit step: x sweep then y sweep of the well-balanced HLLE flux,
/// then drying/positivity bookkeeping (and the optional Manning friction).
/// Negative depths from roundoff are clamped and charged to a mass ledger;
/// a ledger above 1e-8 of the total volume raises ConservationFault.
inline WaterState swe_step(const WaterState& in, const SWEConfig& cfg, double dt,
                           ThreadPool* pool = nullptr, detail::SweScratch* scratch = nullptr) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("swe_step: dt must be > 0");
  const GridSpec& g = in.spec;

  detail::SweScratch local;
  detail::SweScratch& ws = scratch ? *scratch : local;
  ws.prepare(g);

  WaterState out;
  out.spec = g;
  out.bed = in.bed;
  out.t = in.t + dt;
  out.h.resize(g.cell_count());
  out.hu.resize(g.cell_count());
  out.hv.resize(g.cell_count());

  detail::swe_sweep_x(in, cfg, dt, ws.h1, ws.hu1, ws.hv1, pool);
  detail::swe_sweep_y(g, ws.h1, ws.hu1, ws.hv1, in.bed, cfg, dt, ws.face, out, pool);

  // Positivity, drying, optional friction, and the conservation ledger in
  // one fused pass.  Partials combine in row order (deterministic).
  struct RowTally {
    double deficit = 0.0;
    double volume = 0.0;
    bool finite = true;
  };
  const bool manning = cfg.manning_n > 0.0;
  const RowTally tally = ordered_row_reduce(
      pool, g.ny, RowTally{},
      [&](int j) {
        RowTally t;
        const std::size_t row = static_cast<std::size_t>(j) * g.nx;
        for (int i = 0; i < g.nx; ++i) {
          const std::size_t k = row + i;
          double hk = out.h[k];
          if (hk < 0.0) {
            t.deficit -= hk;
            hk = 0.0;
            out.h[k] = 0.0;
          }
          if (hk < cfg.h_dry) {
            out.hu[k] = 0.0;
            out.hv[k] = 0.0;
          } else if (manning) {
            const double u = out.hu[k] / hk;
            const double v = out.hv[k] / hk;
            const double drag = 1.0 + dt * cfg.g * cfg.manning_n * cfg.manning_n *
                                          std::hypot(u, v) / std::pow(hk, 4.0 / 3.0);
            out.hu[k] /= drag;
            out.hv[k] /= drag;
          }
          t.volume += hk;
          if (cfg.debug_checks &&
              !(std::isfinite(out.h[k]) && std::isfinite(out.hu[k]) && std::isfinite(out.hv[k])))
            t.finite = false;
        }
        return t;
      },
      [](RowTally a, const RowTally& b) {
        a.deficit += b.deficit;
        a.volume += b.volume;
        a.finite = a.finite && b.finite;
        return a;
      });

  if (!tally.finite)
    throw std::runtime_error("swe_step: non-finite value detected at t = " + std::to_string(out.t));
  if (tally.deficit > 1e-8 * std::max(tally.volume, 1.0))
    throw ConservationFault("swe_step: clamped depth deficit " + std::to_string(tally.deficit) +
                            " cells*m exceeds 1e-8 of total volume at t = " +
                            std::to_string(out.t));
  return out;
}

/// Replaces the bed, holding the water column height fixed: the free
/// surface moves rigidly with the bed (a rising bed lifts eta, a dropping
/// bed lowers it).  Dry cells stay dry.
inline WaterState apply_bed_update(const WaterState& in, const ScalarField& new_bed) {
  new_bed.check_consistent();
  if (!new_bed.spec.same_geometry(in.spec))
    throw std::invalid_argument("apply_bed_update: new bed grid does not match the state grid");
  WaterState out = in;
  out.bed = new_bed.values;
  return out;
}

/// In-place variant used by the run loop to avoid a full copy per frame.
inline void apply_bed_update_inplace(WaterState& s, const std::vector<double>& new_bed) {
  if (new_bed.size() != s.bed.size())
    throw std::invalid_argument("apply_bed_update: bed size mismatch");
  s.bed = new_bed;
}

/// Total water volume, reduced in deterministic row order.
inline double water_volume(const WaterState& s, ThreadPool* pool = nullptr) {
  const double cell = s.spec.cell_area();
  const double sum = ordered_row_reduce(
      pool, s.spec.ny, 0.0,
      [&](int j) {
        double acc = 0.0;
        const std::size_t row = static_cast<std::size_t>(j) * s.spec.nx;
        for (int i = 0; i < s.spec.nx; ++i) acc += s.h[row + i];
        return acc;
      },
      [](double a, double b) { return a + b; });
  return sum * cell;
}

}  // namespace slidesurge
