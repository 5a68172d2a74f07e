#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slidesurge/coupling.hpp"
#include "slidesurge/esri_ascii.hpp"
#include "slidesurge/grid.hpp"
#include "slidesurge/observables.hpp"
#include "slidesurge/rheology.hpp"
#include "slidesurge/slide.hpp"
#include "slidesurge/swe.hpp"
#include "slidesurge/swe_run.hpp"
#include "slidesurge/version.hpp"

namespace slidesurge {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SlideNumerics {
  double cfl = 0.5;
  double h_min = 1e-4;
  double u_stop = 0.01;
  double t_end = 900.0;
  double frame_dt = 1.0;
};

struct WaterNumerics {
  double cfl = 0.9;
  double h_dry = 1e-3;
  double datum = 0.0;
  double t_end = 900.0;
  double snapshot_dt = 10.0;
};

/// Idealized basin: a super-elliptic bowl with gently rising shores and a
/// cosine-bell sediment mound parked on the western side slope.  The mound is
/// rescaled on the slide grid so its discrete volume matches slide_volume.
struct SyntheticBasinSpec {
  double length = 0.0;       // basin long axis, m
  double width = 0.0;        // basin short axis, m
  double max_depth = 0.0;    // m below datum at the centre
  double shore_slope = 0.1;  // onshore rise per metre beyond the shoreline
  double margin = 200.0;     // onshore margin added around the basin, m
  double slide_cx = 0.0;     // mound centre, domain coordinates, m
  double slide_cy = 0.0;
  double slide_radius = 0.0;  // mound footprint radius, m
  double slide_volume = 0.0;  // m^3
  double cell_size = 5.0;     // water grid spacing, m
  // Slide solver subgrid (domain coordinates); must contain the mound footprint.
  double slide_cell_size = 5.0;
  double region_x0 = 0.0, region_y0 = 0.0, region_x1 = 0.0, region_y1 = 0.0;

  double domain_length() const { return length + 2.0 * margin; }
  double domain_width() const { return width + 2.0 * margin; }

  void validate() const {
    if (!(length > 0.0) || !(width > 0.0))
      throw std::invalid_argument("basin: length and width must be > 0");
    if (!(max_depth > 0.0)) throw std::invalid_argument("basin: max_depth must be > 0");
    if (!(shore_slope > 0.0)) throw std::invalid_argument("basin: shore_slope must be > 0");
    if (!(margin >= 0.0)) throw std::invalid_argument("basin: margin must be >= 0");
    if (!(slide_radius > 0.0)) throw std::invalid_argument("basin: slide_radius must be > 0");
    if (!(slide_volume > 0.0)) throw std::invalid_argument("basin: slide_volume must be > 0");
    if (!(cell_size > 0.0) || !(slide_cell_size > 0.0))
      throw std::invalid_argument("basin: cell sizes must be > 0");
    if (slide_cell_size + 1e-12 < cell_size)
      throw std::invalid_argument("basin: slide_cell_size must be >= cell_size");
    if (!(region_x1 > region_x0) || !(region_y1 > region_y0))
      throw std::invalid_argument("basin: slide region is empty");
  }
};

struct Scenario {
  std::string name;
  std::string output_dir = "out";
  // Either both raster paths are given, or the synthetic block is present.
  std::string bed_path;
  std::string slide_thickness_path;
  std::string dtopo_path;  // optional pre-computed bed motion (water-only runs)
  std::optional<SyntheticBasinSpec> basin;
  MaterialParams material;
  HerschelBulkleyParams hb;
  SlideNumerics slide_numerics;
  WaterNumerics water_numerics;
  std::vector<Gauge> gauges;
  bool use_bingham_path = false;

  void validate() const {
    const bool has_bed = !bed_path.empty();
    if (has_bed == basin.has_value())
      throw ConfigError(
          "scenario: provide either bed_path or a [basin] section (exactly one of the two)");
    if (has_bed && slide_thickness_path.empty() && dtopo_path.empty())
      throw ConfigError(
          "scenario: a raster scenario needs slide_thickness_path (slide runs) or dtopo_path "
          "(water-only runs)");
    if (basin) basin->validate();
    material.validate();
    hb.validate();
    if (!(slide_numerics.t_end > 0.0) || !(water_numerics.t_end > 0.0))
      throw ConfigError("scenario: t_end values must be positive");
    if (!(slide_numerics.frame_dt > 0.0)) throw ConfigError("scenario: frame_dt must be positive");
    if (!(slide_numerics.cfl > 0.0) || slide_numerics.cfl > 1.0)
      throw ConfigError("scenario: slide cfl must lie in (0, 1]");
    if (!(water_numerics.cfl > 0.0) || water_numerics.cfl > 1.0)
      throw ConfigError("scenario: water cfl must lie in (0, 1]");
    if (water_numerics.snapshot_dt < 0.0)
      throw ConfigError("scenario: snapshot_dt must be >= 0 (0 disables snapshots)");
  }
};

namespace detail {

inline double config_number(const std::string& tok, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ConfigError(where + ": expected a number, got '" + tok + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool consumed = false;
};

/// Section -> key -> entry, preserving declaration order per section for
/// gauge lists and error reporting.
struct ConfigTree {
  std::string origin;
  std::map<std::string, std::vector<std::pair<std::string, ConfigEntry>>> sections;

  std::string where(const std::string& sec, const std::string& key, int line) const {
    return origin + ":" + std::to_string(line) + ": [" + sec + "] " + key;
  }
};

inline ConfigTree parse_config_tree(std::istream& in, const std::string& origin) {
  ConfigTree tree;
  tree.origin = origin;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header '" +
                          t + "'");
      section = trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      tree.sections[section];  // register even if empty
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" +
                        t + "'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    auto& sec = tree.sections[section];
    for (const auto& kv : sec)
      if (kv.first == key)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                          "' in [" + section + "]");
    sec.emplace_back(key, ConfigEntry{value, lineno, false});
  }
  return tree;
}

/// Typed access to one section with unknown-key detection.
class SectionReader {
 public:
  SectionReader(ConfigTree& tree, const std::string& name) : tree_(&tree), name_(name) {
    auto it = tree.sections.find(name);
    entries_ = it == tree.sections.end() ? nullptr : &it->second;
  }

  bool present() const { return entries_ != nullptr; }

  ConfigEntry* find(const std::string& key) {
    if (!entries_) return nullptr;
    for (auto& kv : *entries_)
      if (kv.first == key) {
        kv.second.consumed = true;
        return &kv.second;
      }
    return nullptr;
  }

  std::optional<double> number_opt(const std::string& key) {
    ConfigEntry* e = find(key);
    if (!e) return std::nullopt;
    return config_number(e->value, tree_->where(name_, key, e->line));
  }

  double number(const std::string& key, const std::string& why_required = {}) {
    auto v = number_opt(key);
    if (!v)
      throw ConfigError(tree_->origin + ": [" + name_ + "] " + key + " is required" +
                        (why_required.empty() ? "" : " (" + why_required + ")"));
    return *v;
  }

  double number_or(const std::string& key, double fallback) {
    auto v = number_opt(key);
    return v ? *v : fallback;
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    ConfigEntry* e = find(key);
    return e ? e->value : fallback;
  }

  bool flag_or(const std::string& key, bool fallback) {
    ConfigEntry* e = find(key);
    if (!e) return fallback;
    const std::string v = e->value;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(tree_->where(name_, key, e->line) + ": expected true/false, got '" + v + "'");
  }

  void finish() {
    if (!entries_) return;
    for (const auto& kv : *entries_)
      if (!kv.second.consumed)
        throw ConfigError(tree_->origin + ":" + std::to_string(kv.second.line) +
                          ": unknown key '" + kv.first + "' in [" + name_ + "]");
  }

  const std::vector<std::pair<std::string, ConfigEntry>>* raw() const { return entries_; }
  const std::string& origin() const { return tree_->origin; }
  std::string where(const std::string& key, int line) const {
    return tree_->where(name_, key, line);
  }

 private:
  ConfigTree* tree_;
  std::string name_;
  std::vector<std::pair<std::string, ConfigEntry>>* entries_;
};

}  // namespace detail

/// Parses a scenario from configuration text.  `origin` labels error messages
/// (usually the file path).
inline Scenario parse_config_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  detail::ConfigTree tree = detail::parse_config_tree(in, origin);

  static const char* known_sections[] = {"scenario", "material", "rheology", "basin",
                                         "slide",    "water",    "gauges"};
  for (const auto& sec : tree.sections) {
    if (std::find_if(std::begin(known_sections), std::end(known_sections),
                     [&](const char* s) { return sec.first == s; }) == std::end(known_sections))
      throw ConfigError(origin + ": unknown section [" + sec.first + "]");
  }

  Scenario sc;

  {
    detail::SectionReader s(tree, "scenario");
    if (!s.present()) throw ConfigError(origin + ": missing [scenario] section");
    sc.name = s.text_or("name", "");
    if (sc.name.empty()) throw ConfigError(origin + ": [scenario] name is required");
    sc.output_dir = s.text_or("output_dir", "out");
    sc.bed_path = s.text_or("bed_path", "");
    sc.slide_thickness_path = s.text_or("slide_thickness_path", "");
    sc.dtopo_path = s.text_or("dtopo_path", "");
    s.finish();
  }

  {
    detail::SectionReader s(tree, "material");
    if (!s.present()) throw ConfigError(origin + ": missing [material] section");
    sc.material.rho_d = s.number("rho_d");
    sc.material.rho_w = s.number("rho_w");
    sc.material.c_m = s.number("c_m", "no published default; it must be set explicitly");
    sc.material.c_f = s.number("c_f");
    sc.material.c_p = s.number("c_p");
    sc.material.g = s.number_or("g", 9.81);
    s.finish();
  }

  {
    detail::SectionReader s(tree, "rheology");
    if (!s.present()) throw ConfigError(origin + ": missing [rheology] section");
    sc.hb.tau_y = s.number("tau_y");
    sc.hb.mu = s.number("mu", "no published default; it must be set explicitly");
    sc.hb.n = s.number("n");
    sc.use_bingham_path = s.flag_or("bingham_path", false);
    s.finish();
  }

  {
    detail::SectionReader s(tree, "basin");
    if (s.present()) {
      SyntheticBasinSpec b;
      b.length = s.number("length");
      b.width = s.number("width");
      b.max_depth = s.number("max_depth");
      b.shore_slope = s.number_or("shore_slope", 0.1);
      b.margin = s.number_or("margin", 200.0);
      b.slide_cx = s.number("slide_cx");
      b.slide_cy = s.number("slide_cy");
      b.slide_radius = s.number("slide_radius");
      b.slide_volume = s.number("slide_volume");
      b.cell_size = s.number("cell_size");
      b.slide_cell_size = s.number_or("slide_cell_size", b.cell_size);
      b.region_x0 = s.number("region_x0");
      b.region_y0 = s.number("region_y0");
      b.region_x1 = s.number("region_x1");
      b.region_y1 = s.number("region_y1");
      sc.basin = b;
      s.finish();
    }
  }

  {
    detail::SectionReader s(tree, "slide");
    if (s.present()) {
      sc.slide_numerics.cfl = s.number_or("cfl", sc.slide_numerics.cfl);
      sc.slide_numerics.h_min = s.number_or("h_min", sc.slide_numerics.h_min);
      sc.slide_numerics.u_stop = s.number_or("u_stop", sc.slide_numerics.u_stop);
      sc.slide_numerics.t_end = s.number_or("t_end", sc.slide_numerics.t_end);
      sc.slide_numerics.frame_dt = s.number_or("frame_dt", sc.slide_numerics.frame_dt);
      s.finish();
    }
  }

  {
    detail::SectionReader s(tree, "water");
    if (s.present()) {
      sc.water_numerics.cfl = s.number_or("cfl", sc.water_numerics.cfl);
      sc.water_numerics.h_dry = s.number_or("h_dry", sc.water_numerics.h_dry);
      sc.water_numerics.datum = s.number_or("datum", sc.water_numerics.datum);
      sc.water_numerics.t_end = s.number_or("t_end", sc.water_numerics.t_end);
      sc.water_numerics.snapshot_dt = s.number_or("snapshot_dt", sc.water_numerics.snapshot_dt);
      s.finish();
    }
  }

  {
    detail::SectionReader s(tree, "gauges");
    if (s.present() && s.raw()) {
      for (const auto& kv : *s.raw()) {
        const std::string where = s.where(kv.first, kv.second.line);
        int id = 0;
        const auto res =
            std::from_chars(kv.first.data(), kv.first.data() + kv.first.size(), id);
        if (res.ec != std::errc() || res.ptr != kv.first.data() + kv.first.size() || id <= 0)
          throw ConfigError(where + ": gauge keys must be positive integer ids");
        std::istringstream pair(kv.second.value);
        std::string xs, ys, extra;
        if (!(pair >> xs >> ys) || (pair >> extra))
          throw ConfigError(where + ": expected 'x y' coordinates, got '" + kv.second.value + "'");
        Gauge g;
        g.id = id;
        g.x = detail::config_number(xs, where);
        g.y = detail::config_number(ys, where);
        sc.gauges.push_back(g);
      }
      // consume all keys (parsed via raw iteration)
      for (const auto& kv : *s.raw()) s.find(kv.first);
      s.finish();
    }
  }

  sc.validate();
  return sc;
}

inline Scenario parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("parse_config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

/// Emits configuration text that parses back to an equivalent Scenario.
inline std::string serialize_config(const Scenario& sc) {
  std::ostringstream out;
  out << "[scenario]\n";
  out << "name = " << sc.name << "\n";
  out << "output_dir = " << sc.output_dir << "\n";
  if (!sc.bed_path.empty()) out << "bed_path = " << sc.bed_path << "\n";
  if (!sc.slide_thickness_path.empty())
    out << "slide_thickness_path = " << sc.slide_thickness_path << "\n";
  if (!sc.dtopo_path.empty()) out << "dtopo_path = " << sc.dtopo_path << "\n";

  out << "\n[material]\n";
  out << "rho_d = " << format_double(sc.material.rho_d) << "\n";
  out << "rho_w = " << format_double(sc.material.rho_w) << "\n";
  out << "c_m = " << format_double(sc.material.c_m) << "\n";
  out << "c_f = " << format_double(sc.material.c_f) << "\n";
  out << "c_p = " << format_double(sc.material.c_p) << "\n";
  out << "g = " << format_double(sc.material.g) << "\n";

  out << "\n[rheology]\n";
  out << "tau_y = " << format_double(sc.hb.tau_y) << "\n";
  out << "mu = " << format_double(sc.hb.mu) << "\n";
  out << "n = " << format_double(sc.hb.n) << "\n";
  out << "bingham_path = " << (sc.use_bingham_path ? "true" : "false") << "\n";

  if (sc.basin) {
    const SyntheticBasinSpec& b = *sc.basin;
    out << "\n[basin]\n";
    out << "length = " << format_double(b.length) << "\n";
    out << "width = " << format_double(b.width) << "\n";
    out << "max_depth = " << format_double(b.max_depth) << "\n";
    out << "shore_slope = " << format_double(b.shore_slope) << "\n";
    out << "margin = " << format_double(b.margin) << "\n";
    out << "slide_cx = " << format_double(b.slide_cx) << "\n";
    out << "slide_cy = " << format_double(b.slide_cy) << "\n";
    out << "slide_radius = " << format_double(b.slide_radius) << "\n";
    out << "slide_volume = " << format_double(b.slide_volume) << "\n";
    out << "cell_size = " << format_double(b.cell_size) << "\n";
    out << "slide_cell_size = " << format_double(b.slide_cell_size) << "\n";
    out << "region_x0 = " << format_double(b.region_x0) << "\n";
    out << "region_y0 = " << format_double(b.region_y0) << "\n";
    out << "region_x1 = " << format_double(b.region_x1) << "\n";
    out << "region_y1 = " << format_double(b.region_y1) << "\n";
  }

  out << "\n[slide]\n";
  out << "cfl = " << format_double(sc.slide_numerics.cfl) << "\n";
  out << "h_min = " << format_double(sc.slide_numerics.h_min) << "\n";
  out << "u_stop = " << format_double(sc.slide_numerics.u_stop) << "\n";
  out << "t_end = " << format_double(sc.slide_numerics.t_end) << "\n";
  out << "frame_dt = " << format_double(sc.slide_numerics.frame_dt) << "\n";

  out << "\n[water]\n";
  out << "cfl = " << format_double(sc.water_numerics.cfl) << "\n";
  out << "h_dry = " << format_double(sc.water_numerics.h_dry) << "\n";
  out << "datum = " << format_double(sc.water_numerics.datum) << "\n";
  out << "t_end = " << format_double(sc.water_numerics.t_end) << "\n";
  out << "snapshot_dt = " << format_double(sc.water_numerics.snapshot_dt) << "\n";

  if (!sc.gauges.empty()) {
    out << "\n[gauges]\n";
    for (const auto& g : sc.gauges)
      out << g.id << " = " << format_double(g.x) << " " << format_double(g.y) << "\n";
  }
  return out.str();
}

namespace detail {

/// Signed offset of cell centre i from the midpoint of an n-cell axis, in
/// metres.  Computed so mirror cells i and n-1-i get bitwise-opposite values.
inline double centered_offset(int i, int n, double d) {
  return d * ((i + 0.5) - 0.5 * n);
}

}  // namespace detail

/// Builds (water-grid bed, slide-grid initial thickness).  The bed covers the
/// basin plus its onshore margin; the slide thickness lives on the coarser
/// solver subgrid.  Mirror-symmetric specs produce bitwise mirror-symmetric
/// fields about the long axis.
inline std::pair<ScalarField, ScalarField> make_synthetic_basin(const SyntheticBasinSpec& spec) {
  spec.validate();
  const double Lx = spec.domain_length();
  const double Ly = spec.domain_width();
  const int nx = static_cast<int>(std::lround(Lx / spec.cell_size));
  const int ny = static_cast<int>(std::lround(Ly / spec.cell_size));
  if (nx < 4 || ny < 4) throw std::invalid_argument("make_synthetic_basin: grid too small");

  GridSpec wg;
  wg.nx = nx;
  wg.ny = ny;
  wg.dx = spec.cell_size;
  wg.dy = spec.cell_size;
  wg.x0 = 0.5 * spec.cell_size;
  wg.y0 = 0.5 * spec.cell_size;
  wg.validate();

  const double a = 0.5 * spec.length;
  const double b = 0.5 * spec.width;
  const double cx = 0.5 * Lx;
  const double cy = 0.5 * Ly;
  constexpr double kEdgeExponent = 3.0;  // super-ellipse corner sharpness

  auto bed_at = [&](double xr, double yr) {
    // xr, yr: offsets from the basin centre
    const double ax = std::abs(xr) / a;
    const double ay = std::abs(yr) / b;
    const double s = std::pow(std::pow(ax, kEdgeExponent) + std::pow(ay, kEdgeExponent),
                              1.0 / kEdgeExponent);
    if (s < 1.0) return spec.max_depth * (s * s - 1.0);
    const double r = std::hypot(xr, yr);
    return spec.shore_slope * r * (s - 1.0) / s;  // distance beyond shoreline along the ray
  };

  ScalarField bed(wg, 0.0);
  for (int j = 0; j < ny; ++j) {
    const double yr = detail::centered_offset(j, ny, wg.dy);
    for (int i = 0; i < nx; ++i) {
      const double xr = detail::centered_offset(i, nx, wg.dx);
      bed.values[static_cast<std::size_t>(j) * nx + i] = bed_at(xr, yr);
    }
  }

  // slide subgrid: snap the requested region onto whole slide cells
  const double sd = spec.slide_cell_size;
  const int si0 = static_cast<int>(std::floor(spec.region_x0 / sd));
  const int sj0 = static_cast<int>(std::floor(spec.region_y0 / sd));
  const int si1 = static_cast<int>(std::ceil(spec.region_x1 / sd));
  const int sj1 = static_cast<int>(std::ceil(spec.region_y1 / sd));
  GridSpec sg;
  sg.nx = si1 - si0;
  sg.ny = sj1 - sj0;
  sg.dx = sd;
  sg.dy = sd;
  sg.x0 = (si0 + 0.5) * sd;
  sg.y0 = (sj0 + 0.5) * sd;
  sg.validate();
  if (sg.x0 < wg.x0 - 1e-9 || sg.y0 < wg.y0 - 1e-9 || sg.x_max() > wg.x_max() + 1e-9 ||
      sg.y_max() > wg.y_max() + 1e-9)
    throw std::invalid_argument("make_synthetic_basin: slide region exceeds the domain");

  // mound support must sit inside the slide region
  if (spec.slide_cx - spec.slide_radius < sg.x0 || spec.slide_cx + spec.slide_radius > sg.x_max() ||
      spec.slide_cy - spec.slide_radius < sg.y0 || spec.slide_cy + spec.slide_radius > sg.y_max())
    throw std::invalid_argument(
        "make_synthetic_basin: slide mound spills outside the slide region");

  // cos bell, then a discrete rescale to hit the requested volume exactly
  const double mound_off_x = (si0 + 0.5 * sg.nx) * sd - cx;  // region centre minus basin centre
  const double mound_off_y = (sj0 + 0.5 * sg.ny) * sd - cy;
  const double tx = spec.slide_cx - cx;
  const double ty = spec.slide_cy - cy;
  ScalarField thick(sg, 0.0);
  for (int j = 0; j < sg.ny; ++j) {
    const double yr = detail::centered_offset(j, sg.ny, sd) + mound_off_y;
    for (int i = 0; i < sg.nx; ++i) {
      const double xr = detail::centered_offset(i, sg.nx, sd) + mound_off_x;
      const double d = std::hypot(xr - tx, yr - ty);
      if (d < spec.slide_radius)
        thick.values[static_cast<std::size_t>(j) * sg.nx + i] =
            std::cos(0.5 * std::numbers::pi * d / spec.slide_radius);
    }
  }
  double raw = 0.0;
  for (double v : thick.values) raw += v;
  raw *= sg.cell_area();
  if (!(raw > 0.0))
    throw std::invalid_argument("make_synthetic_basin: slide mound resolves to zero volume");
  const double scale = spec.slide_volume / raw;
  for (double& v : thick.values) v *= scale;

  return {std::move(bed), std::move(thick)};
}

// ---------------------------------------------------------------------------
// End-to-end orchestration
// ---------------------------------------------------------------------------

struct RunOptions {
  std::string out_dir;  // overrides scenario output_dir when non-empty
  int threads = 0;      // 0: resolve from environment / default 1
  bool quiet = false;
};

namespace detail {

struct PreparedInputs {
  ScalarField water_bed;   // full-domain bed on the water grid
  ScalarField slide_bed;   // bed resampled onto the slide grid
  ScalarField slide_h;     // initial slide thickness on the slide grid
};

inline PreparedInputs prepare_inputs(const Scenario& sc) {
  PreparedInputs in;
  if (sc.basin) {
    auto [bed, thick] = make_synthetic_basin(*sc.basin);
    in.water_bed = std::move(bed);
    in.slide_h = std::move(thick);
  } else {
    in.water_bed = read_esri_ascii(sc.bed_path);
    for (double v : in.water_bed.values)
      if (v == in.water_bed.spec.nodata)
        throw std::runtime_error("bed raster contains NODATA cells; fill them before running");
    if (sc.slide_thickness_path.empty())
      throw std::runtime_error("scenario has no slide_thickness_path; cannot run the slide phase");
    in.slide_h = read_esri_ascii(sc.slide_thickness_path);
    for (double v : in.slide_h.values)
      if (v == in.slide_h.spec.nodata)
        throw std::runtime_error("slide thickness raster contains NODATA cells");
  }
  in.slide_bed = resample(in.water_bed, in.slide_h.spec);
  return in;
}

inline void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + path + "': " + ec.message());
}

inline std::string snapshot_name(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "eta_%07.1f.asc", t);
  for (char& c : buf)
    if (c == '.') c = '_';
  std::string s(buf);
  // keep the extension dot
  const auto pos = s.rfind("_asc");
  if (pos != std::string::npos) s.replace(pos, 4, ".asc");
  return s;
}

class WallClock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

struct CoupledSummary {
  double slide_rest_time = std::numeric_limits<double>::quiet_NaN();
  long slide_steps = 0;
  double slide_volume_initial = 0.0;
  double slide_volume_final = 0.0;
  long water_steps = 0;
  RunupReport runup;
  std::vector<GaugeSeries> gauges;
  double wall_seconds_slide = 0.0;
  double wall_seconds_water = 0.0;
};

namespace detail {

inline void write_manifest(const Scenario& sc, const RunOptions& opt, const CoupledSummary& sum,
                           const GridSpec* water_grid, const GridSpec* slide_grid,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest '" + path + "'");
  out << "code_version=" << version_string << "\n";
  out << "scenario=" << sc.name << "\n";
  out << "threads=" << resolve_worker_count(opt.threads) << "\n";
  if (water_grid)
    out << "water_grid=" << water_grid->nx << "x" << water_grid->ny
        << " cell=" << format_double(water_grid->dx) << "\n";
  if (slide_grid)
    out << "slide_grid=" << slide_grid->nx << "x" << slide_grid->ny
        << " cell=" << format_double(slide_grid->dx) << "\n";
  const DerivedFactors f = sc.use_bingham_path ? bingham_factors(sc.hb.tau_y, sc.hb.mu)
                                               : derived_factors(sc.hb);
  out << "derived.reduced_gravity=" << format_double(reduced_gravity(sc.material)) << "\n";
  out << "derived.reference_strain_rate=" << format_double(f.gamma_r) << "\n";
  out << "derived.shape_factor_beta=" << format_double(f.beta) << "\n";
  out << "derived.form_factor_alpha=" << format_double(f.alpha) << "\n";
  out << "derived.shear_velocity_ratio=" << format_double(f.r_vel) << "\n";
  out << "derived.added_mass_factor=" << format_double(sc.material.added_mass_factor()) << "\n";
  out << "slide.steps=" << sum.slide_steps << "\n";
  out << "slide.rest_time=" << format_double(sum.slide_rest_time) << "\n";
  out << "water.steps=" << sum.water_steps << "\n";
  out << "wall_seconds.slide=" << format_double(sum.wall_seconds_slide) << "\n";
  out << "wall_seconds.water=" << format_double(sum.wall_seconds_water) << "\n";
  out << "\n# full configuration (parse_config round-trip form)\n";
  std::istringstream cfg(serialize_config(sc));
  std::string line;
  while (std::getline(cfg, line)) out << "config." << line << "\n";
}

}  // namespace detail

/// Runs slide -> bed-motion export -> water -> observables, writing all
/// artifacts under the output directory.  Returns 0 on success, 1 on any
/// fault (with a diagnostic on stderr).
inline int run_coupled(const Scenario& sc_in, const RunOptions& opt = {}) {
  try {
    Scenario sc = sc_in;
    sc.validate();
    if (!opt.out_dir.empty()) sc.output_dir = opt.out_dir;
    const std::string& out = sc.output_dir;
    detail::ensure_dir(out);
    detail::ensure_dir(out + "/gauges");
    detail::ensure_dir(out + "/fields");
    detail::ensure_dir(out + "/dtopo");

    const int workers = resolve_worker_count(opt.threads);
    std::optional<ThreadPool> pool;
    if (workers > 1) pool.emplace(workers);
    ThreadPool* pp = pool ? &*pool : nullptr;

    detail::PreparedInputs inputs = detail::prepare_inputs(sc);
    CoupledSummary sum;
    sum.slide_volume_initial = field_stats(inputs.slide_h).integral;

    // --- slide phase ---
    detail::WallClock slide_clock;
    SlideConfig scfg;
    scfg.hb = sc.hb;
    scfg.mat = sc.material;
    scfg.cfl = sc.slide_numerics.cfl;
    scfg.h_min = sc.slide_numerics.h_min;
    scfg.u_stop = sc.slide_numerics.u_stop;
    scfg.t_end = sc.slide_numerics.t_end;
    scfg.use_bingham_path = sc.use_bingham_path;
    scfg.bed = inputs.slide_bed;

    std::ofstream steps_csv(out + "/slide_steps.csv");
    if (!steps_csv) throw std::runtime_error("cannot write " + out + "/slide_steps.csv");
    steps_csv << "t,dt,max_speed,moving_cells,volume\n";
    long slide_steps = 0;
    auto step_sink = [&](double t, const SlideStepReport& rep) {
      ++slide_steps;
      steps_csv << format_double(t) << ',' << format_double(rep.dt) << ','
                << format_double(rep.max_speed) << ',' << rep.moving_cell_count << ','
                << format_double(rep.volume) << '\n';
    };

    SlideRunResult slide =
        run_slide(inputs.slide_h, scfg, sc.slide_numerics.frame_dt, step_sink, pp);
    sum.slide_steps = slide_steps;
    sum.slide_rest_time = slide.rest_time;
    sum.slide_volume_final = slide_volume(slide.final_state);
    sum.wall_seconds_slide = slide_clock.seconds();

    export_dtopo(slide.series, out + "/dtopo/slide_motion.dtopo");

    // deposit profile along the mound centre -> basin centre ray
    double deposit_distal = 0.0;
    {
      const GridSpec& g = slide.final_state.spec;
      double px0, py0, px1, py1;
      if (sc.basin) {
        // Ray from the mound centre toward the basin centre, clipped to the
        // slide-grid hull (the basin centre itself may lie outside it).
        px0 = sc.basin->slide_cx;
        py0 = sc.basin->slide_cy;
        double ddx = 0.5 * sc.basin->domain_length() - px0;
        double ddy = 0.5 * sc.basin->domain_width() - py0;
        if (ddx == 0.0 && ddy == 0.0) ddx = 1.0;  // degenerate: pick +x
        double t_exit = std::numeric_limits<double>::infinity();
        auto clip = [&](double p, double d, double lo, double hi) {
          if (d > 0.0)
            t_exit = std::min(t_exit, (hi - p) / d);
          else if (d < 0.0)
            t_exit = std::min(t_exit, (lo - p) / d);
        };
        clip(px0, ddx, g.x0, g.x_max());
        clip(py0, ddy, g.y0, g.y_max());
        px1 = px0 + t_exit * ddx;
        py1 = py0 + t_exit * ddy;
      } else {
        px0 = g.x0;
        py0 = 0.5 * (g.y0 + g.y_max());
        px1 = g.x_max();
        py1 = py0;
      }
      const auto profile = deposit_profile(slide.final_state, {{px0, py0}, {px1, py1}});
      std::ofstream pf(out + "/deposit_profile.csv");
      if (!pf) throw std::runtime_error("cannot write " + out + "/deposit_profile.csv");
      pf << "arclength,thickness\n";
      double span = profile.empty() ? 0.0 : profile.back().first;
      for (const auto& p : profile) {
        pf << format_double(p.first) << ',' << format_double(p.second) << '\n';
        if (p.first >= 0.5 * span) deposit_distal = std::max(deposit_distal, p.second);
      }
    }

    // --- water phase ---
    detail::WallClock water_clock;
    SWEConfig wcfg;
    wcfg.cfl = sc.water_numerics.cfl;
    wcfg.h_dry = sc.water_numerics.h_dry;
    wcfg.datum = sc.water_numerics.datum;
    wcfg.t_end = sc.water_numerics.t_end;
    wcfg.g = sc.material.g;

    SWERunHooks hooks;
    hooks.snapshot_dt = sc.water_numerics.snapshot_dt;
    hooks.on_snapshot = [&](const WaterState& st) {
      ScalarField eta(st.spec, st.spec.nodata);
      for (std::size_t k = 0; k < st.h.size(); ++k)
        if (st.h[k] >= wcfg.h_dry) eta.values[k] = st.h[k] + st.bed[k];
      write_esri_ascii(out + "/fields/" + detail::snapshot_name(st.t), eta);
    };

    SWERunResult water =
        run_swe(inputs.water_bed, slide.series, wcfg, sc.gauges, hooks, pp);
    sum.water_steps = water.steps;
    sum.wall_seconds_water = water_clock.seconds();

    for (const auto& gs : water.gauges)
      write_gauge_csv(gs, out + "/gauges/gauge_" + std::to_string(gs.gauge.id) + ".csv");
    write_max_fields(water.max_fields, out + "/fields");
    sum.runup = inundation_metrics(water.initial_state, water.max_fields, water.wet, wcfg);
    sum.gauges = water.gauges;

    // --- report ---
    {
      std::ofstream rep(out + "/report.txt");
      if (!rep) throw std::runtime_error("cannot write " + out + "/report.txt");
      rep << "slide_rest_time=" << format_double(sum.slide_rest_time) << "\n";
      rep << "slide_steps=" << sum.slide_steps << "\n";
      rep << "slide_volume_initial=" << format_double(sum.slide_volume_initial) << "\n";
      rep << "slide_volume_final=" << format_double(sum.slide_volume_final) << "\n";
      rep << "water_steps=" << sum.water_steps << "\n";
      rep << "max_runup_height=" << format_double(sum.runup.max_runup_height) << "\n";
      rep << "max_runup_distance=" << format_double(sum.runup.max_runup_distance) << "\n";
      rep << "inundated_area=" << format_double(sum.runup.inundated_area) << "\n";
      for (const auto& gs : sum.gauges) {
        double peak = 0.0, arrival = -1.0;
        for (const auto& smp : gs.samples) {
          const double anom = smp.dry ? 0.0 : std::abs(smp.eta - wcfg.datum);
          if (anom > peak) peak = anom;
          if (arrival < 0.0 && anom > water.max_fields.threshold) arrival = smp.t;
        }
        rep << "gauge_" << gs.gauge.id << "_peak=" << format_double(peak) << "\n";
        rep << "gauge_" << gs.gauge.id << "_arrival=" << format_double(arrival) << "\n";
      }
      // thickest deposit past the midpoint of the profile ray
      rep << "deposit_distal_max=" << format_double(deposit_distal) << "\n";
    }

    detail::write_manifest(sc, opt, sum, &inputs.water_bed.spec, &inputs.slide_bed.spec,
                           out + "/manifest.txt");
    if (!opt.quiet) {
      std::printf("run_coupled: %s finished (slide %.1fs wall, water %.1fs wall)\n",
                  sc.name.c_str(), sum.wall_seconds_slide, sum.wall_seconds_water);
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run_coupled: error: %s\n", e.what());
    return 1;
  }
}

}  // namespace slidesurge
