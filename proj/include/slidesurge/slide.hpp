#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidesurge/coupling.hpp"
#include "slidesurge/faults.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/parallel.hpp"
#include "slidesurge/rheology.hpp"

namespace slidesurge {

/// Two-layer slide state: an unsheared plug of thickness h_p riding on a
/// basal shear layer h_s, sharing the plug velocity u_p (the shear layer's
/// mean velocity is r_vel * u_p).  Cells at rest hold all material in the
/// plug (h_s = 0, u_p = 0).
struct SlideState {
  GridSpec spec;
  std::vector<double> h_p, h_s, upx, upy;
  double t = 0.0;

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(j) * spec.nx + static_cast<std::size_t>(i);
  }
  double thickness(int i, int j) const { return h_p[idx(i, j)] + h_s[idx(i, j)]; }
};

struct SlideConfig {
  HerschelBulkleyParams hb;
  MaterialParams mat;
  double cfl = 0.5;
  double h_min = 1e-4;   // thickness floor below which a cell is dynamically inert, m
  double u_stop = 0.01;  // global-rest speed threshold, m/s
  double t_end = 0.0;    // s
  ScalarField bed;       // static basal surface b
  bool use_bingham_path = false;  // route closures through the independent Bingham code

  void validate() const {
    hb.validate();
    mat.validate();
    bed.check_consistent();
    if (!(cfl > 0.0) || !(cfl < 1.0))
      throw std::invalid_argument("SlideConfig: cfl must lie in (0, 1)");
    if (!(h_min > 0.0)) throw std::invalid_argument("SlideConfig: h_min must be > 0");
    if (!(u_stop > 0.0)) throw std::invalid_argument("SlideConfig: u_stop must be > 0");
    if (!(t_end > 0.0)) throw std::invalid_argument("SlideConfig: t_end must be > 0");
    if (use_bingham_path && hb.n != 1.0)
      throw std::invalid_argument("SlideConfig: the Bingham path requires n = 1");
  }

  DerivedFactors factors() const {
    return use_bingham_path ? bingham_factors(hb.tau_y, hb.mu) : derived_factors(hb);
  }
};

struct SlideStepReport {
  double dt = 0.0;
  double max_speed = 0.0;
  std::size_t moving_cell_count = 0;
  double volume = 0.0;
};

enum class CellRegime : std::uint8_t { statik = 0, dynamic_ = 1 };

/// The slide starts as an unsheared plug at rest.
inline SlideState init_slide_state(const ScalarField& initial_thickness, const SlideConfig& cfg) {
  cfg.validate();
  initial_thickness.check_consistent();
  if (!initial_thickness.spec.same_geometry(cfg.bed.spec))
    throw std::invalid_argument("init_slide_state: thickness grid does not match the bed grid");
  for (double v : initial_thickness.values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("init_slide_state: thickness must be finite and >= 0, got " +
                                  std::to_string(v));
  SlideState s;
  s.spec = initial_thickness.spec;
  s.h_p = initial_thickness.values;
  s.h_s.assign(s.spec.cell_count(), 0.0);
  s.upx.assign(s.spec.cell_count(), 0.0);
  s.upy.assign(s.spec.cell_count(), 0.0);
  s.t = 0.0;
  return s;
}

namespace detail {

/// Central-difference gradient of `f` at (i, j); one-sided at the walls.
inline void cell_gradient(const std::vector<double>& f, const GridSpec& g, int i, int j,
                          double& gx, double& gy) {
  const std::size_t k = static_cast<std::size_t>(j) * g.nx + i;
  if (i == 0)
    gx = (f[k + 1] - f[k]) / g.dx;
  else if (i == g.nx - 1)
    gx = (f[k] - f[k - 1]) / g.dx;
  else
    gx = (f[k + 1] - f[k - 1]) / (2.0 * g.dx);
  const std::size_t nx = static_cast<std::size_t>(g.nx);
  if (j == 0)
    gy = (f[k + nx] - f[k]) / g.dy;
  else if (j == g.ny - 1)
    gy = (f[k] - f[k - nx]) / g.dy;
  else
    gy = (f[k + nx] - f[k - nx]) / (2.0 * g.dy);
}

}  // namespace detail

/// A cell is dynamic when the gravitational driving stress exceeds the yield
/// strength, or when it is already in motion.
inline CellRegime yield_check(const SlideState& s, const SlideConfig& cfg, int i, int j) {
  const std::size_t k = s.idx(i, j);
  if (s.upx[k] != 0.0 || s.upy[k] != 0.0) return CellRegime::dynamic_;
  const double H = s.h_p[k] + s.h_s[k];
  if (H <= 0.0) return CellRegime::statik;
  // surface = H + b evaluated through a scratch-free local stencil
  const GridSpec& g = s.spec;
  auto surf = [&](int ii, int jj) {
    const std::size_t kk = s.idx(ii, jj);
    return s.h_p[kk] + s.h_s[kk] + cfg.bed.values[kk];
  };
  double gx, gy;
  if (i == 0)
    gx = (surf(1, j) - surf(0, j)) / g.dx;
  else if (i == g.nx - 1)
    gx = (surf(i, j) - surf(i - 1, j)) / g.dx;
  else
    gx = (surf(i + 1, j) - surf(i - 1, j)) / (2.0 * g.dx);
  if (j == 0)
    gy = (surf(i, 1) - surf(i, 0)) / g.dy;
  else if (j == g.ny - 1)
    gy = (surf(i, j) - surf(i, j - 1)) / g.dy;
  else
    gy = (surf(i, j + 1) - surf(i, j - 1)) / (2.0 * g.dy);
  const double driving = cfg.mat.rho_d * reduced_gravity(cfg.mat) * H * std::hypot(gx, gy);
  return driving > cfg.hb.tau_y ? CellRegime::dynamic_ : CellRegime::statik;
}

/// Largest stable step over dynamic cells; empty when everything is static.
inline std::optional<double> compute_slide_timestep(const SlideState& s, const SlideConfig& cfg,
                                                    ThreadPool* pool = nullptr) {
  cfg.validate();
  const double gred = reduced_gravity(cfg.mat);
  const double cell = std::min(s.spec.dx, s.spec.dy);
  const double inf = std::numeric_limits<double>::infinity();
  const double m = ordered_row_reduce(
      pool, s.spec.ny, inf,
      [&](int j) {
        double best = inf;
        for (int i = 0; i < s.spec.nx; ++i) {
          if (yield_check(s, cfg, i, j) == CellRegime::statik) continue;
          const std::size_t k = s.idx(i, j);
          const double H = s.h_p[k] + s.h_s[k];
          const double lambda = std::hypot(s.upx[k], s.upy[k]) + std::sqrt(std::max(0.0, gred * H));
          if (lambda > 0.0) best = std::min(best, cell / lambda);
        }
        return best;
      },
      [](double a, double b) { return std::min(a, b); });
  if (m == inf) return std::nullopt;
  const double dt = cfg.cfl * m;
  const double remaining = cfg.t_end - s.t;
  return std::min(dt, remaining);
}

namespace detail {

/// Scratch buffers reused across slide steps.
struct SlideScratch {
  std::vector<double> H, hs0, mpx, mpy, msx, msy, lam, surf, gx, gy;
  std::vector<double> Hn, hsn, mpxn, mpyn, msxn, msyn;
  std::vector<std::uint8_t> dyn;

  void prepare(const GridSpec& g) {
    const std::size_t n = g.cell_count();
    for (auto* v : {&H, &hs0, &mpx, &mpy, &msx, &msy, &lam, &surf, &gx, &gy,
                    &Hn, &hsn, &mpxn, &mpyn, &msxn, &msyn})
      v->resize(n);
    dyn.resize(n);
  }
};

// Six-component local Lax-Friedrichs face flux of the layered system.
// q = (H, mpx, mpy, msx, msy, h_s); the last component advects the shear
// layer thickness so the interlayer exchange rate can be diagnosed.
struct SlideFaceFlux {
  double f[6];
};

inline SlideFaceFlux slide_face_flux_x(const double* q_L, const double* q_R, double upL, double upR,
                                       double usL, double usR, double lamL, double lamR,
                                       double alpha) {
  // physical x-fluxes
  const double FL[6] = {q_L[1] + q_L[3],          q_L[1] * upL, q_L[2] * upL,
                        alpha * (q_L[3] * usL),   alpha * (q_L[4] * usL), q_L[3]};
  const double FR[6] = {q_R[1] + q_R[3],          q_R[1] * upR, q_R[2] * upR,
                        alpha * (q_R[3] * usR),   alpha * (q_R[4] * usR), q_R[3]};
  const double lam = std::max(lamL, lamR);
  SlideFaceFlux out;
  for (int c = 0; c < 6; ++c) out.f[c] = 0.5 * (FL[c] + FR[c]) - (0.5 * lam) * (q_R[c] - q_L[c]);
  return out;
}

}  // namespace detail

/// One transport stage of the fractional step: unsplit finite-volume update
/// of (H, plug momentum, shear momentum) with local Lax-Friedrichs fluxes,
/// then the explicit gravity and interlayer-exchange sources, then state
/// recovery.  Faces whose two sides are both static carry zero flux; static
/// cells keep zero momentum (mass may still deposit onto them).  Walls are
/// reflective.  After recovery, moving cells split their column so the plug
/// base sits where the driving stress equals the yield strength.
inline SlideState hyperbolic_step(const SlideState& in, const SlideConfig& cfg, double dt,
                                  ThreadPool* pool = nullptr,
                                  detail::SlideScratch* scratch = nullptr) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("hyperbolic_step: dt must be > 0");
  const GridSpec& g = in.spec;
  if (!g.same_geometry(cfg.bed.spec))
    throw std::invalid_argument("hyperbolic_step: state grid does not match the bed grid");

  detail::SlideScratch local;
  detail::SlideScratch& ws = scratch ? *scratch : local;
  ws.prepare(g);

  const DerivedFactors fac = cfg.factors();
  const double gred = reduced_gravity(cfg.mat);
  const double amass = cfg.mat.added_mass_factor();
  const double r = fac.r_vel;
  const double alpha = fac.alpha;
  const double rho_d = cfg.mat.rho_d;
  const double tau_y = cfg.hb.tau_y;
  const std::size_t nx = static_cast<std::size_t>(g.nx);

  // --- stage 0: conserved variables, wave speeds, regime mask, old surface gradient
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      const double H = in.h_p[k] + in.h_s[k];
      ws.H[k] = H;
      ws.hs0[k] = in.h_s[k];
      ws.mpx[k] = in.h_p[k] * in.upx[k];
      ws.mpy[k] = in.h_p[k] * in.upy[k];
      ws.msx[k] = in.h_s[k] * (r * in.upx[k]);
      ws.msy[k] = in.h_s[k] * (r * in.upy[k]);
      ws.lam[k] = std::hypot(in.upx[k], in.upy[k]) + std::sqrt(std::max(0.0, gred * H));
      ws.surf[k] = H + cfg.bed.values[k];
      ws.dyn[k] = yield_check(in, cfg, i, j) == CellRegime::dynamic_ ? 1 : 0;
    }
  });
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      detail::cell_gradient(ws.surf, g, i, j, ws.gx[k], ws.gy[k]);
    }
  });

  // --- stage 1: unsplit flux-differencing transport
  const double rx = dt / g.dx;
  const double ry = dt / g.dy;
  const double rxa = rx / amass;
  const double rya = ry / amass;
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);

      auto gather = [&](std::size_t kk, bool flip_x, bool flip_y, double* q, double& up,
                        double& us, double& lam) {
        q[0] = ws.H[kk];
        q[1] = flip_x ? -ws.mpx[kk] : ws.mpx[kk];
        q[2] = flip_y ? -ws.mpy[kk] : ws.mpy[kk];
        q[3] = flip_x ? -ws.msx[kk] : ws.msx[kk];
        q[4] = flip_y ? -ws.msy[kk] : ws.msy[kk];
        q[5] = ws.hs0[kk];
        const double ux = flip_x ? -in.upx[kk] : in.upx[kk];
        up = ux;
        us = r * ux;
        lam = ws.lam[kk];
      };
      auto gather_y = [&](std::size_t kk, bool flip_y, double* q, double& up, double& us,
                          double& lam) {
        // for y faces the face-normal velocity is the y component
        q[0] = ws.H[kk];
        q[1] = flip_y ? -ws.mpy[kk] : ws.mpy[kk];   // normal plug momentum
        q[2] = ws.mpx[kk];                          // transverse plug momentum
        q[3] = flip_y ? -ws.msy[kk] : ws.msy[kk];
        q[4] = ws.msx[kk];
        q[5] = ws.hs0[kk];
        const double uy = flip_y ? -in.upy[kk] : in.upy[kk];
        up = uy;
        us = r * uy;
        lam = ws.lam[kk];
      };

      double qL[6], qR[6], upL, upR, usL, usR, lamL, lamR;
      double dF[6] = {0, 0, 0, 0, 0, 0};

      // x faces -------------------------------------------------------
      {
        // west face (between i-1 and i; ghost mirror at the wall)
        const std::size_t kw = i > 0 ? k - 1 : k;
        const bool both_static_w = !ws.dyn[k] && !ws.dyn[kw];
        if (!both_static_w) {
          gather(kw, i == 0, false, qL, upL, usL, lamL);
          gather(k, false, false, qR, upR, usR, lamR);
          const auto f = detail::slide_face_flux_x(qL, qR, upL, upR, usL, usR, lamL, lamR, alpha);
          for (int c = 0; c < 6; ++c) dF[c] -= f.f[c];
        }
        // east face
        const std::size_t ke = i + 1 < g.nx ? k + 1 : k;
        const bool both_static_e = !ws.dyn[k] && !ws.dyn[ke];
        if (!both_static_e) {
          gather(k, false, false, qL, upL, usL, lamL);
          gather(ke, i + 1 == g.nx, false, qR, upR, usR, lamR);
          const auto f = detail::slide_face_flux_x(qL, qR, upL, upR, usL, usR, lamL, lamR, alpha);
          for (int c = 0; c < 6; ++c) dF[c] += f.f[c];
        }
      }
      // accumulate x contribution
      double Hn = ws.H[k] - rx * dF[0];
      double mpxn = ws.mpx[k] - rxa * dF[1];
      double mpyn = ws.mpy[k] - rxa * dF[2];
      double msxn = ws.msx[k] - rxa * dF[3];
      double msyn = ws.msy[k] - rxa * dF[4];
      double hsn = ws.hs0[k] - rx * dF[5];

      // y faces -------------------------------------------------------
      {
        double dG[6] = {0, 0, 0, 0, 0, 0};
        const std::size_t ks = j > 0 ? k - nx : k;
        const bool both_static_s = !ws.dyn[k] && !ws.dyn[ks];
        if (!both_static_s) {
          gather_y(ks, j == 0, qL, upL, usL, lamL);
          gather_y(k, false, qR, upR, usR, lamR);
          const auto f = detail::slide_face_flux_x(qL, qR, upL, upR, usL, usR, lamL, lamR, alpha);
          for (int c = 0; c < 6; ++c) dG[c] -= f.f[c];
        }
        const std::size_t kn = j + 1 < g.ny ? k + nx : k;
        const bool both_static_n = !ws.dyn[k] && !ws.dyn[kn];
        if (!both_static_n) {
          gather_y(k, false, qL, upL, usL, lamL);
          gather_y(kn, j + 1 == g.ny, qR, upR, usR, lamR);
          const auto f = detail::slide_face_flux_x(qL, qR, upL, upR, usL, usR, lamL, lamR, alpha);
          for (int c = 0; c < 6; ++c) dG[c] += f.f[c];
        }
        Hn -= ry * dG[0];
        mpyn -= rya * dG[1];  // normal y flux acts on the y momentum
        mpxn -= rya * dG[2];
        msyn -= rya * dG[3];
        msxn -= rya * dG[4];
        hsn -= ry * dG[5];
      }

      // gravity source on dynamic cells (explicit, old state)
      if (ws.dyn[k]) {
        const double cgx = (dt / amass) * gred * ws.gx[k];
        const double cgy = (dt / amass) * gred * ws.gy[k];
        mpxn -= in.h_p[k] * cgx;
        mpyn -= in.h_p[k] * cgy;
        msxn -= in.h_s[k] * cgx;
        msyn -= in.h_s[k] * cgy;
      } else {
        mpxn = 0.0;
        mpyn = 0.0;
        msxn = 0.0;
        msyn = 0.0;
      }

      ws.Hn[k] = Hn;
      ws.hsn[k] = hsn;
      ws.mpxn[k] = mpxn;
      ws.mpyn[k] = mpyn;
      ws.msxn[k] = msxn;
      ws.msyn[k] = msyn;
    }
  });

  // --- stage 2: new-surface gradient for the equilibrium split
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      ws.surf[k] = std::max(0.0, ws.Hn[k]) + cfg.bed.values[k];
    }
  });
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      detail::cell_gradient(ws.surf, g, i, j, ws.gx[k], ws.gy[k]);
    }
  });

  // --- stage 3: interlayer exchange, recovery, and the new split
  SlideState out;
  out.spec = g;
  out.t = in.t + dt;
  out.h_p.resize(g.cell_count());
  out.h_s.resize(g.cell_count());
  out.upx.resize(g.cell_count());
  out.upy.resize(g.cell_count());

  struct RowTally {
    double deficit = 0.0;
    double volume = 0.0;
  };
  const RowTally tally = ordered_row_reduce(
      pool, g.ny, RowTally{},
      [&](int j) {
        RowTally tl;
        for (int i = 0; i < g.nx; ++i) {
          const std::size_t k = in.idx(i, j);
          double H = ws.Hn[k];
          if (H < 0.0) {
            tl.deficit -= H;
            H = 0.0;
          }
          tl.volume += H;

          double hp = H, hs = 0.0, ux = 0.0, uy = 0.0;
          if (ws.dyn[k] && H >= cfg.h_min) {
            // the equilibrium split: plug occupies the column down to where
            // the driving stress reaches the yield strength
            const double gm = std::hypot(ws.gx[k], ws.gy[k]);
            const double denom = rho_d * gred * gm;
            double hp_eq = H;
            if (denom * H > tau_y) hp_eq = tau_y / denom;
            double mpx = ws.mpxn[k];
            double mpy = ws.mpyn[k];
            double msx = ws.msxn[k];
            double msy = ws.msyn[k];
            // Interlayer exchange chi = d(h_s)/dt + div(h_s u_s).  The
            // advected layer thickness hsn already carries -dt*div(h_s u_s),
            // so the rate of the equilibrium split relative to it is exactly
            // the conversion rate between the layers.
            const double hs_eq = H - hp_eq;
            const double chi = (hs_eq - ws.hsn[k]) / dt;
            const double cx = (dt / amass) * in.upx[k] * chi;
            const double cy = (dt / amass) * in.upy[k] * chi;
            mpx -= cx;
            mpy -= cy;
            msx += cx;
            msy += cy;
            // recovery: u_p from the combined momentum, then the new split
            ux = (mpx + msx / r) / H;
            uy = (mpy + msy / r) / H;
            if (std::hypot(ux, uy) < 1e-8) {
              ux = 0.0;
              uy = 0.0;
              hp = H;
              hs = 0.0;
            } else {
              hp = hp_eq;
              hs = hs_eq;
            }
          } else if (H >= cfg.h_min) {
            // static cell: mass may have deposited; it joins the plug at rest
            hp = H;
            hs = 0.0;
          } else {
            hp = H;
            hs = 0.0;
          }
          out.h_p[k] = hp;
          out.h_s[k] = hs;
          out.upx[k] = ux;
          out.upy[k] = uy;
        }
        return tl;
      },
      [](RowTally a, const RowTally& b) {
        a.deficit += b.deficit;
        a.volume += b.volume;
        return a;
      });

  if (tally.deficit > 1e-6 * std::max(tally.volume, 1e-12))
    throw ConservationFault("hyperbolic_step: clamped thickness deficit " +
                            std::to_string(tally.deficit) +
                            " cells*m exceeds 1e-6 of total volume at t = " +
                            std::to_string(out.t));
  return out;
}

/// Second stage of the fractional step: yield resistance, water drag and
/// basal shear friction decelerate each moving cell along its own velocity
/// direction.  Per layer the momentum magnitude drops by the frictional
/// impulse, clamped at zero so friction can stop material but never push it
/// backwards; when both layers exhaust their momentum the velocity becomes
/// exactly zero.
inline SlideState friction_source_step(const SlideState& in, const SlideConfig& cfg, double dt,
                                       ThreadPool* pool = nullptr) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("friction_source_step: dt must be > 0");
  const GridSpec& g = in.spec;

  const DerivedFactors fac = cfg.factors();
  const double amass = cfg.mat.added_mass_factor();
  const double r = fac.r_vel;
  const double rho_d = cfg.mat.rho_d;
  const double tau_y = cfg.hb.tau_y;
  const double n = cfg.hb.n;
  const bool bingham = cfg.use_bingham_path;

  // total thickness field for the pressure-drag gradient
  std::vector<double> H(g.cell_count());
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      H[k] = in.h_p[k] + in.h_s[k];
    }
  });

  SlideState out = in;
  out.t = in.t;  // friction is the second half of the same step
  parallel_rows(pool, g.ny, [&](int j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = in.idx(i, j);
      const double ux = in.upx[k];
      const double uy = in.upy[k];
      if (ux == 0.0 && uy == 0.0) continue;
      const double umag = std::hypot(ux, uy);
      const double Hk = H[k];
      if (!(Hk > 0.0)) continue;

      double ghx, ghy;
      detail::cell_gradient(H, g, i, j, ghx, ghy);
      const Vec2 u{ux, uy};
      const Vec2 tf = friction_drag(u, cfg.mat);
      const Vec2 tp = pressure_drag(u, {ghx, ghy}, cfg.mat);
      const double drag_mag = std::hypot(tf.x + tp.x, tf.y + tp.y);

      const double d_p = dt * (tau_y + drag_mag) / (rho_d * amass);
      double d_s = 0.0;
      if (in.h_s[k] > 0.0) {
        const double ratio = umag / (fac.gamma_r * in.h_s[k]);
        const double f_s = bingham ? fac.beta * ratio : fac.beta * std::pow(ratio, n);
        d_s = dt * tau_y * f_s / (rho_d * amass);
      }

      const double mp_mag = in.h_p[k] * umag;
      const double ms_mag = in.h_s[k] * (r * umag);
      const double mp_new = std::max(0.0, mp_mag - d_p);
      const double ms_new = std::max(0.0, ms_mag - d_s);
      if (mp_new == mp_mag && ms_new == ms_mag) continue;  // below representable effect

      const double unew = (mp_new + ms_new / r) / Hk;
      if (unew <= 0.0) {
        out.upx[k] = 0.0;
        out.upy[k] = 0.0;
      } else {
        const double scale = unew / umag;
        out.upx[k] = ux * scale;
        out.upy[k] = uy * scale;
      }
    }
  });
  return out;
}

/// One full step: stable dt, transport stage, friction stage.  A fully
/// static (quiescent) state advances the clock unchanged, to t_end or to the
/// dt_cap horizon (so frame cadences still see it at every frame time).
inline std::pair<SlideState, SlideStepReport> advance(const SlideState& in, const SlideConfig& cfg,
                                                      ThreadPool* pool = nullptr,
                                                      detail::SlideScratch* scratch = nullptr,
                                                      double dt_cap = 0.0) {
  cfg.validate();
  if (!(in.t < cfg.t_end))
    throw std::invalid_argument("advance: state time is already at or past t_end");

  const std::optional<double> dt_opt = compute_slide_timestep(in, cfg, pool);
  SlideStepReport rep;
  if (!dt_opt) {
    SlideState frozen = in;
    double jump = cfg.t_end - in.t;
    if (dt_cap > 0.0) jump = std::min(jump, dt_cap);
    rep.dt = jump;
    frozen.t = in.t + jump;
    rep.max_speed = 0.0;
    rep.moving_cell_count = 0;
    double vol = 0.0;
    for (std::size_t k = 0; k < frozen.h_p.size(); ++k) vol += frozen.h_p[k] + frozen.h_s[k];
    rep.volume = vol * in.spec.cell_area();
    return {std::move(frozen), rep};
  }

  double dt = *dt_opt;
  if (dt_cap > 0.0) dt = std::min(dt, dt_cap);
  SlideState mid = hyperbolic_step(in, cfg, dt, pool, scratch);
  SlideState next = friction_source_step(mid, cfg, dt, pool);

  rep.dt = dt;
  struct RowMax {
    double speed = 0.0;
    std::size_t moving = 0;
    double vol = 0.0;
  };
  const RowMax m = ordered_row_reduce(
      pool, next.spec.ny, RowMax{},
      [&](int j) {
        RowMax rm;
        for (int i = 0; i < next.spec.nx; ++i) {
          const std::size_t k = next.idx(i, j);
          const double s = std::hypot(next.upx[k], next.upy[k]);
          rm.speed = std::max(rm.speed, s);
          if (s > 0.0) ++rm.moving;
          rm.vol += next.h_p[k] + next.h_s[k];
        }
        return rm;
      },
      [](RowMax a, const RowMax& b) {
        a.speed = std::max(a.speed, b.speed);
        a.moving += b.moving;
        a.vol += b.vol;
        return a;
      });
  rep.max_speed = m.speed;
  rep.moving_cell_count = m.moving;
  rep.volume = m.vol * next.spec.cell_area();
  return {std::move(next), rep};
}

struct SlideRunResult {
  BedMotionSeries series;   // bed + total thickness frames
  SlideState final_state;
  double rest_time = std::numeric_limits<double>::quiet_NaN();  // when motion ceased
  std::size_t steps = 0;
};

/// Runs the slide to t_end or to global rest, recording bed + thickness
/// frames every frame_dt (the first frame at t = 0 and the final state are
/// always captured).  Steps are clipped to land exactly on frame times.
/// step_sink, when given, observes every step report (for CSV streaming).
inline SlideRunResult run_slide(const ScalarField& initial, const SlideConfig& cfg,
                                double frame_dt,
                                const std::function<void(double, const SlideStepReport&)>&
                                    step_sink = {},
                                ThreadPool* pool = nullptr) {
  cfg.validate();
  if (!(frame_dt > 0.0)) throw std::invalid_argument("run_slide: frame_dt must be > 0");

  SlideState state = init_slide_state(initial, cfg);
  FrameRecorder rec(frame_dt);
  detail::SlideScratch scratch;

  ScalarField frame(state.spec, 0.0);
  auto capture = [&](bool force) {
    for (std::size_t k = 0; k < frame.values.size(); ++k)
      frame.values[k] = cfg.bed.values[k] + state.h_p[k] + state.h_s[k];
    if (force)
      rec.force(state.t, frame);
    else
      rec.offer(state.t, frame);
  };
  capture(false);  // t = 0

  SlideRunResult result;
  bool was_moving = false;
  while (state.t < cfg.t_end) {
    const double cap = rec.next_time() - state.t;
    auto [next, rep] = advance(state, cfg, pool, &scratch, cap > 0.0 ? cap : 0.0);
    state = std::move(next);
    ++result.steps;
    if (step_sink) step_sink(state.t, rep);
    capture(false);
    if (rep.max_speed >= cfg.u_stop) {
      was_moving = true;
    } else if (was_moving) {
      result.rest_time = state.t;  // motion fell below the rest threshold
      break;
    }
  }
  capture(true);  // final state
  result.series = rec.take();
  result.final_state = std::move(state);
  return result;
}

/// Total slide volume, m^3.
inline double slide_volume(const SlideState& s, ThreadPool* pool = nullptr) {
  const double sum = ordered_row_reduce(
      pool, s.spec.ny, 0.0,
      [&](int j) {
        double acc = 0.0;
        for (int i = 0; i < s.spec.nx; ++i) {
          const std::size_t k = s.idx(i, j);
          acc += s.h_p[k] + s.h_s[k];
        }
        return acc;
      },
      [](double a, double b) { return a + b; });
  return sum * s.spec.cell_area();
}

/// Samples total thickness along a polyline at dx/2 spacing; returns
/// (arclength, thickness) pairs.
inline std::vector<std::pair<double, double>> deposit_profile(
    const SlideState& final_state, const std::vector<std::pair<double, double>>& line) {
  if (line.size() < 2) throw std::invalid_argument("deposit_profile: polyline needs >= 2 vertices");
  ScalarField thick(final_state.spec, 0.0);
  for (std::size_t k = 0; k < thick.values.size(); ++k)
    thick.values[k] = final_state.h_p[k] + final_state.h_s[k];

  const double step = 0.5 * final_state.spec.dx;
  std::vector<std::pair<double, double>> out;
  double s0 = 0.0;
  for (std::size_t v = 0; v + 1 < line.size(); ++v) {
    const double x0 = line[v].first, y0 = line[v].second;
    const double x1 = line[v + 1].first, y1 = line[v + 1].second;
    const double seg = std::hypot(x1 - x0, y1 - y0);
    const int nsteps = std::max(1, static_cast<int>(std::ceil(seg / step)));
    for (int q = (v == 0 ? 0 : 1); q <= nsteps; ++q) {
      const double f = static_cast<double>(q) / nsteps;
      const double x = x0 + f * (x1 - x0);
      const double y = y0 + f * (y1 - y0);
      out.emplace_back(s0 + f * seg, bilinear_sample(thick, x, y));
    }
    s0 += seg;
  }
  return out;
}

}  // namespace slidesurge
