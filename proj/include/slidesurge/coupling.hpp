#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slidesurge/esri_ascii.hpp"
#include "slidesurge/grid.hpp"

namespace slidesurge {

/// Time-ordered sequence of bed-elevation frames on one grid: the moving
/// bathymetry handed from the slide solver to the water solver.
struct BedMotionSeries {
  std::vector<TimeStampedField> frames;

  void validate() const {
    if (frames.empty()) throw std::invalid_argument("BedMotionSeries: needs at least one frame");
    if (frames.front().t != 0.0)
      throw std::invalid_argument("BedMotionSeries: first frame must be at t = 0, got t = " +
                                  std::to_string(frames.front().t));
    for (std::size_t k = 0; k < frames.size(); ++k) {
      frames[k].field.check_consistent();
      if (!std::isfinite(frames[k].t) || frames[k].t < 0.0)
        throw std::invalid_argument("BedMotionSeries: frame times must be finite and >= 0");
      if (k > 0 && !(frames[k].t > frames[k - 1].t))
        throw std::invalid_argument("BedMotionSeries: frame times must be strictly increasing (" +
                                    std::to_string(frames[k - 1].t) + " then " +
                                    std::to_string(frames[k].t) + ")");
      if (k > 0 && !frames[k].field.spec.same_geometry(frames.front().field.spec))
        throw std::invalid_argument("BedMotionSeries: all frames must share one grid");
    }
  }

  const GridSpec& spec() const { return frames.front().field.spec; }
  double t_last() const { return frames.back().t; }
};

/// Collects frames at a fixed cadence.  offer() stores a frame when its time
/// is due (t = 0 always is); force() stores unconditionally (used for the
/// final state).  Times must arrive strictly increasing.
class FrameRecorder {
 public:
  explicit FrameRecorder(double frame_dt) : frame_dt_(frame_dt) {
    if (!(frame_dt > 0.0))
      throw std::invalid_argument("FrameRecorder: frame_dt must be > 0, got " +
                                  std::to_string(frame_dt));
  }

  bool due(double t) const {
    return series_.frames.empty() || t >= next_ - 1e-9 * frame_dt_;
  }

  /// Next scheduled capture time (steppers may clip dt to land on it).
  double next_time() const { return next_; }

  void offer(double t, const ScalarField& field) {
    if (due(t)) force(t, field);
  }

  void force(double t, const ScalarField& field) {
    if (!series_.frames.empty() && !(t > series_.frames.back().t)) return;  // already captured
    series_.frames.push_back({t, field});
    // Schedule the next multiple of frame_dt strictly after t; the small
    // slack keeps a capture that landed an ulp short of its multiple from
    // re-arming the same slot.
    next_ = frame_dt_ * (std::floor((t + 1e-9 * frame_dt_) / frame_dt_) + 1.0);
  }

  BedMotionSeries take() {
    series_.validate();
    return std::move(series_);
  }

 private:
  double frame_dt_;
  double next_ = 0.0;
  BedMotionSeries series_;
};

/// Runs `run(sink)` where sink(t, field) offers frames at the recorder's
/// cadence.  The hook must emit t = 0 first and its final state last; the
/// final state is always captured.
template <typename RunHook>
BedMotionSeries record_frames(RunHook&& run, double frame_dt) {
  FrameRecorder rec(frame_dt);
  double last_t = 0.0;
  const ScalarField* last_field = nullptr;
  ScalarField last_copy;
  auto sink = [&](double t, const ScalarField& field) {
    rec.offer(t, field);
    last_t = t;
    last_copy = field;
    last_field = &last_copy;
  };
  run(sink);
  if (last_field) rec.force(last_t, *last_field);
  return rec.take();
}

/// Bed elevation at time t on the target grid: linear interpolation between
/// the bracketing frames (clamped to the first/last frame outside the
/// recorded window), then bilinear resampling.
inline ScalarField bed_at_time(const BedMotionSeries& series, double t, const GridSpec& target) {
  series.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("bed_at_time: t must be >= 0");
  const auto& fr = series.frames;

  auto resolve = [&](const ScalarField& f) {
    return f.spec.same_geometry(target) ? f : resample(f, target);
  };

  if (t <= fr.front().t) return resolve(fr.front().field);
  if (t >= fr.back().t) return resolve(fr.back().field);
  std::size_t hi = 1;
  while (fr[hi].t < t) ++hi;
  if (fr[hi].t == t) return resolve(fr[hi].field);
  const auto& a = fr[hi - 1];
  const auto& b = fr[hi];
  const double w = (t - a.t) / (b.t - a.t);
  ScalarField mix = a.field;
  for (std::size_t k = 0; k < mix.values.size(); ++k)
    mix.values[k] += w * (b.field.values[k] - mix.values[k]);
  return resolve(mix);
}

namespace detail {

/// Token reader that tracks line numbers for parse diagnostics.
class LineTokens {
 public:
  explicit LineTokens(std::istream& in) : in_(in) {}

  bool next(std::string& tok) {
    while (true) {
      if (pos_ < line_.size()) {
        const std::size_t start = line_.find_first_not_of(" \t\r", pos_);
        if (start != std::string::npos) {
          const std::size_t end = line_.find_first_of(" \t\r", start);
          tok = line_.substr(start, end == std::string::npos ? std::string::npos : end - start);
          pos_ = end == std::string::npos ? line_.size() : end;
          return true;
        }
      }
      if (!std::getline(in_, line_)) return false;
      ++line_no_;
      pos_ = 0;
    }
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::string line_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

[[noreturn]] inline void dtopo_error(const std::string& path, std::size_t line,
                                     const std::string& msg) {
  throw std::runtime_error("dtopo: " + path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Writes the series as a self-describing text file: a fixed header, then
/// per frame a "t <seconds>" line followed by the grid rows top-first.
inline void export_dtopo(const BedMotionSeries& series, const std::string& path) {
  series.validate();
  const GridSpec& g = series.spec();
  if (g.dx != g.dy)
    throw std::invalid_argument("dtopo: format carries one cellsize; need dx == dy");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dtopo: cannot open '" + path + "' for writing");
  out << "SLIDESURGE-DTOPO 1\n";
  out << "nframes " << series.frames.size() << "\n";
  out << "ncols " << g.nx << "\n";
  out << "nrows " << g.ny << "\n";
  out << "x0 " << format_double(g.x0) << "\n";
  out << "y0 " << format_double(g.y0) << "\n";
  out << "cellsize " << format_double(g.dx) << "\n";
  std::string line;
  for (const auto& fr : series.frames) {
    out << "t " << format_double(fr.t) << "\n";
    for (int j = g.ny - 1; j >= 0; --j) {
      line.clear();
      for (int i = 0; i < g.nx; ++i) {
        if (i) line += ' ';
        line += format_double(fr.field.at(i, j));
      }
      line += '\n';
      out << line;
    }
  }
  if (!out) throw std::runtime_error("dtopo: write to '" + path + "' failed");
}

inline BedMotionSeries import_dtopo(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dtopo: cannot open '" + path + "' for reading");
  detail::LineTokens toks(in);
  std::string tok;

  auto expect = [&](const char* what) -> std::string {
    if (!toks.next(tok)) detail::dtopo_error(path, toks.line_no(), std::string("unexpected end of file, expected ") + what);
    return tok;
  };
  auto expect_key = [&](const char* key) {
    const std::string got = expect(key);
    if (got != key)
      detail::dtopo_error(path, toks.line_no(), "expected '" + std::string(key) + "', got '" + got + "'");
  };
  auto number = [&](const char* what) {
    const std::string s = expect(what);
    try {
      return detail::parse_number(s, what);
    } catch (const std::exception& e) {
      detail::dtopo_error(path, toks.line_no(), e.what());
    }
  };

  expect_key("SLIDESURGE-DTOPO");
  const std::string ver = expect("format version");
  if (ver != "1") detail::dtopo_error(path, toks.line_no(), "unsupported format version '" + ver + "'");
  expect_key("nframes");
  const long nframes = static_cast<long>(number("nframes"));
  expect_key("ncols");
  GridSpec g;
  g.nx = static_cast<int>(number("ncols"));
  expect_key("nrows");
  g.ny = static_cast<int>(number("nrows"));
  expect_key("x0");
  g.x0 = number("x0");
  expect_key("y0");
  g.y0 = number("y0");
  expect_key("cellsize");
  g.dx = g.dy = number("cellsize");
  if (nframes < 1) detail::dtopo_error(path, toks.line_no(), "nframes must be >= 1");
  try {
    g.validate();
  } catch (const std::exception& e) {
    detail::dtopo_error(path, toks.line_no(), e.what());
  }

  BedMotionSeries series;
  series.frames.reserve(static_cast<std::size_t>(nframes));
  for (long f = 0; f < nframes; ++f) {
    expect_key("t");
    const double t = number("frame time");
    ScalarField field(g, 0.0);
    for (int fr = 0; fr < g.ny; ++fr) {
      const int j = g.ny - 1 - fr;
      for (int i = 0; i < g.nx; ++i) {
        field.at(i, j) = number("data value");
      }
    }
    if (f == 0 && t != 0.0) detail::dtopo_error(path, toks.line_no(), "first frame must be at t = 0");
    if (f > 0 && !(t > series.frames.back().t))
      detail::dtopo_error(path, toks.line_no(), "frame times must be strictly increasing");
    series.frames.push_back({t, std::move(field)});
  }
  if (toks.next(tok))
    detail::dtopo_error(path, toks.line_no(), "trailing content after the last frame: '" + tok + "'");
  series.validate();
  return series;
}

}  // namespace slidesurge
