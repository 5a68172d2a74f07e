#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slidesurge/coupling.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/observables.hpp"
#include "slidesurge/parallel.hpp"
#include "slidesurge/swe.hpp"

namespace slidesurge {

namespace detail {

/// Resamples bed-motion frames onto the water cells whose centers fall inside
/// the frame grid's hull, then blends the bracketing pair per step.  Cells
/// outside that box keep the basin bed untouched.
class BedPatcher {
 public:
  BedPatcher(const BedMotionSeries& series, const GridSpec& water)
      : series_(&series), wnx_(water.nx) {
    const GridSpec& s = series.spec();
    const double tol = 1e-9 * std::min(water.dx, water.dy);
    i0_ = static_cast<int>(std::ceil((s.x0 - tol - water.x0) / water.dx));
    j0_ = static_cast<int>(std::ceil((s.y0 - tol - water.y0) / water.dy));
    const int i1 = static_cast<int>(std::floor((s.x_max() + tol - water.x0) / water.dx));
    const int j1 = static_cast<int>(std::floor((s.y_max() + tol - water.y0) / water.dy));
    i0_ = std::max(i0_, 0);
    j0_ = std::max(j0_, 0);
    nx_ = std::min(i1, water.nx - 1) - i0_ + 1;
    ny_ = std::min(j1, water.ny - 1) - j0_ + 1;
    if (nx_ <= 0 || ny_ <= 0) {
      nx_ = ny_ = 0;  // no overlap: patching is a no-op
      return;
    }
    box_.nx = nx_;
    box_.ny = ny_;
    box_.dx = water.dx;
    box_.dy = water.dy;
    box_.x0 = water.x0 + i0_ * water.dx;
    box_.y0 = water.y0 + j0_ * water.dy;
    box_.nodata = water.nodata;
    cache_[0].index = cache_[1].index = -1;
  }

  bool active() const { return nx_ > 0 && series_->frames.size() > 0; }

  /// Writes bed values for time t into `bed` (water-grid layout), h untouched.
  void apply(double t, std::vector<double>& bed) {
    if (!active()) return;
    const auto& fr = series_->frames;
    // locate bracketing frames; clamp outside the covered time span
    std::size_t k = 0;
    while (k + 1 < fr.size() && fr[k + 1].t <= t) ++k;
    const Patch& a = frame(k);
    if (k + 1 == fr.size() || t <= fr[k].t) {
      blit(a.values, nullptr, 0.0, bed);
      return;
    }
    const Patch& b = frame(k + 1);
    const double w = (t - fr[k].t) / (fr[k + 1].t - fr[k].t);
    blit(a.values, &b.values, w, bed);
  }

 private:
  struct Patch {
    long index = -1;
    std::vector<double> values;
  };

  const Patch& frame(std::size_t k) {
    Patch& slot = cache_[k % 2];
    if (slot.index != static_cast<long>(k)) {
      ScalarField res = resample(series_->frames[k].field, box_);
      slot.values = std::move(res.values);
      slot.index = static_cast<long>(k);
    }
    return slot;
  }

  void blit(const std::vector<double>& a, const std::vector<double>* b, double w,
            std::vector<double>& bed) const {
    for (int j = 0; j < ny_; ++j) {
      const std::size_t dst = static_cast<std::size_t>(j0_ + j) * wnx_ + i0_;
      const std::size_t src = static_cast<std::size_t>(j) * nx_;
      for (int i = 0; i < nx_; ++i) {
        double v = a[src + i];
        if (b) v += w * ((*b)[src + i] - v);
        bed[dst + i] = v;
      }
    }
  }

  const BedMotionSeries* series_;
  int wnx_ = 0;
  GridSpec box_;
  int i0_ = 0, j0_ = 0, nx_ = 0, ny_ = 0;
  Patch cache_[2];
};

}  // namespace detail

struct SWERunHooks {
  double snapshot_dt = 0.0;  // 0 disables snapshots
  std::function<void(const WaterState&)> on_snapshot;
  std::function<void(double t, double dt, int step)> on_step;
};

struct SWERunResult {
  WaterState final_state;
  MaxFields max_fields;
  WetMask wet;
  std::vector<GaugeSeries> gauges;
  WaterState initial_state;
  long steps = 0;

  SWERunResult(WaterState fs, MaxFields mf, WetMask wm, WaterState is)
      : final_state(std::move(fs)),
        max_fields(std::move(mf)),
        wet(std::move(wm)),
        initial_state(std::move(is)) {}
};

/// Runs the water solver from rest over `basin_bed`, replaying `motion` as a
/// moving-bed forcing.  Gauges are sampled every step; maxima, arrival times
/// and the ever-wet mask update every step.  dt is clipped so the run lands
/// exactly on bed-frame times, snapshot times and t_end.
inline SWERunResult run_swe(const ScalarField& basin_bed, const BedMotionSeries& motion,
                            const SWEConfig& cfg, const std::vector<Gauge>& gauges,
                            const SWERunHooks& hooks = {}, ThreadPool* pool = nullptr) {
  cfg.validate();
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("run_swe: t_end must be > 0");
  motion.validate();
  check_gauges(gauges, basin_bed.spec);
  if (hooks.snapshot_dt < 0.0) throw std::invalid_argument("run_swe: snapshot_dt must be >= 0");

  ScalarField bed = basin_bed;
  detail::BedPatcher patcher(motion, bed.spec);
  patcher.apply(0.0, bed.values);

  WaterState state = init_water_state(bed, cfg);
  SWERunResult result(state, init_max_fields(bed.spec, cfg.datum), WetMask(bed.spec), state);

  std::vector<GaugeSeries> series(gauges.size());
  for (std::size_t i = 0; i < gauges.size(); ++i) series[i].gauge = gauges[i];
  auto sample_all = [&](const WaterState& s) {
    const auto row = sample_gauges(s, cfg, gauges);
    for (std::size_t i = 0; i < row.size(); ++i) series[i].samples.push_back(row[i]);
  };

  update_max_fields(result.max_fields, state, cfg);
  result.wet.update(state, cfg);

  // snapshot cadence: capture at every multiple of snapshot_dt (with ulp slack)
  const bool snapshots = hooks.snapshot_dt > 0.0 && static_cast<bool>(hooks.on_snapshot);
  const double snap_dt = hooks.snapshot_dt;
  double snap_next = snap_dt;
  auto snap_advance = [&](double t) {
    snap_next = snap_dt * (std::floor((t + 1e-9 * snap_dt) / snap_dt) + 1.0);
  };
  if (snapshots) hooks.on_snapshot(state);

  const bool moving_bed = patcher.active() && motion.frames.size() > 1;
  detail::SweScratch scratch;
  long step = 0;
  while (state.t < cfg.t_end) {
    if (moving_bed && state.t <= motion.t_last()) {
      patcher.apply(state.t, state.bed);
    }
    const std::optional<double> dt_cfl = compute_swe_timestep(state, cfg, pool);
    if (!dt_cfl) {
      // fully dry: nothing can evolve; jump to the next bed frame or finish
      double t_next = cfg.t_end;
      if (moving_bed) {
        for (const auto& f : motion.frames)
          if (f.t > state.t + 1e-12) {
            t_next = std::min(t_next, f.t);
            break;
          }
      }
      state.t = t_next;
      continue;
    }
    double dt = std::min(*dt_cfl, cfg.t_end - state.t);
    if (moving_bed) {
      for (const auto& f : motion.frames) {
        if (f.t > state.t + 1e-9 * dt) {
          dt = std::min(dt, f.t - state.t);
          break;
        }
      }
    }
    if (snapshots) dt = std::min(dt, snap_next - state.t);
    if (!(dt > 0.0)) throw std::runtime_error("run_swe: timestep collapsed to zero");

    WaterState next = swe_step(state, cfg, dt, pool, &scratch);
    state = std::move(next);
    ++step;

    sample_all(state);
    update_max_fields(result.max_fields, state, cfg);
    result.wet.update(state, cfg);
    if (snapshots && state.t >= snap_next - 1e-9 * snap_dt) {
      hooks.on_snapshot(state);
      snap_advance(state.t);
    }
    if (hooks.on_step) hooks.on_step(state.t, dt, static_cast<int>(step));
  }

  result.final_state = std::move(state);
  result.gauges = std::move(series);
  result.steps = step;
  return result;
}

}  // namespace slidesurge
