#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

#include "slidesurge/scenario.hpp"

using namespace slidesurge;
namespace fs = std::filesystem;

namespace {

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("slidesurge-scenario-") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

// A complete synthetic-basin scenario; tau_y is a parameter so tests can
// switch between a firmly parked mound and one that flows.
std::string basin_config(const std::string& tau_y) {
  return std::string("[scenario]\n") +
         "name = toy-basin\n" +
         "\n[material]\n" +
         "rho_d = 1500\nrho_w = 1000\nc_m = 1\nc_f = 0.01\nc_p = 1\n" +
         "\n[rheology]\n" +
         "tau_y = " + tau_y + "\nmu = 50\nn = 1\n" +
         "\n[basin]\n" +
         "length = 400\nwidth = 300\nmax_depth = 30\nshore_slope = 0.05\nmargin = 100\n" +
         "slide_cx = 180\nslide_cy = 250\nslide_radius = 40\nslide_volume = 20000\n" +
         "cell_size = 10\nslide_cell_size = 10\n" +
         "region_x0 = 120\nregion_y0 = 190\nregion_x1 = 240\nregion_y1 = 310\n" +
         "\n[slide]\n" +
         "t_end = 30\nframe_dt = 2\nu_stop = 0.01\n" +
         "\n[water]\n" +
         "t_end = 20\ndatum = 0\nsnapshot_dt = 0\n" +
         "\n[gauges]\n" +
         "1 = 300 250\n" +
         "2 = 520 250\n";
}

}  // namespace

TEST_CASE("config parsing fills every section") {
  const Scenario sc = parse_config_text(basin_config("65"), "inline");
  REQUIRE(sc.name == "toy-basin");
  REQUIRE(sc.output_dir == "out");
  REQUIRE(sc.material.rho_d == 1500.0);
  REQUIRE(sc.material.rho_w == 1000.0);
  REQUIRE(sc.material.c_m == 1.0);
  REQUIRE(sc.material.c_f == 0.01);
  REQUIRE(sc.material.c_p == 1.0);
  REQUIRE(sc.material.g == 9.81);  // default
  REQUIRE(sc.hb.tau_y == 65.0);
  REQUIRE(sc.hb.mu == 50.0);
  REQUIRE(sc.hb.n == 1.0);
  REQUIRE_FALSE(sc.use_bingham_path);
  REQUIRE(sc.basin.has_value());
  REQUIRE(sc.basin->length == 400.0);
  REQUIRE(sc.basin->slide_volume == 20000.0);
  REQUIRE(sc.basin->margin == 100.0);
  REQUIRE(sc.slide_numerics.t_end == 30.0);
  REQUIRE(sc.slide_numerics.frame_dt == 2.0);
  REQUIRE(sc.slide_numerics.cfl == 0.5);  // default
  REQUIRE(sc.water_numerics.t_end == 20.0);
  REQUIRE(sc.water_numerics.snapshot_dt == 0.0);
  REQUIRE(sc.water_numerics.cfl == 0.9);  // default
  REQUIRE(sc.gauges.size() == 2);
  REQUIRE(sc.gauges[0].id == 1);
  REQUIRE(sc.gauges[0].x == 300.0);
  REQUIRE(sc.gauges[1].id == 2);
  REQUIRE(sc.gauges[1].y == 250.0);
}

TEST_CASE("config errors carry file positions and reasons") {
  // Line numbers below refer to this exact text.
  const std::string base =
      "[scenario]\n"        // 1
      "name = t\n"          // 2
      "bed_path = b.asc\n"  // 3
      "dtopo_path = d\n"    // 4
      "[material]\n"        // 5
      "rho_d = 1500\n"      // 6
      "rho_w = 1000\n"      // 7
      "c_m = 1\n"           // 8
      "c_f = 0.01\n"        // 9
      "c_p = 1\n"           // 10
      "[rheology]\n"        // 11
      "tau_y = 65\n"        // 12
      "mu = 10\n"           // 13
      "n = 0.5\n";          // 14

  {
    const std::string msg =
        thrown_message([&] { parse_config_text(base + "[water]\nfroop = 3\n", "cfg"); });
    REQUIRE(msg.find("unknown key 'froop'") != std::string::npos);
    REQUIRE(msg.find("cfg:16:") != std::string::npos);
    REQUIRE(msg.find("[water]") != std::string::npos);
  }
  {
    const std::string msg =
        thrown_message([&] { parse_config_text(base + "[warp]\nx = 1\n", "cfg"); });
    REQUIRE(msg.find("unknown section [warp]") != std::string::npos);
  }
  {
    const std::string msg =
        thrown_message([&] { parse_config_text(base + "[water]\ncfl = 0.5\ncfl = 0.6\n", "cfg"); });
    REQUIRE(msg.find("duplicate key 'cfl'") != std::string::npos);
    REQUIRE(msg.find(":17:") != std::string::npos);
  }
  {
    // Omit mu: the message must say why it cannot be defaulted.
    std::string no_mu = base;
    no_mu.replace(no_mu.find("mu = 10\n"), 8, "");
    const std::string msg = thrown_message([&] { parse_config_text(no_mu, "cfg"); });
    REQUIRE(msg.find("mu is required") != std::string::npos);
    REQUIRE(msg.find("no published default") != std::string::npos);
  }
  {
    std::string no_cm = base;
    no_cm.replace(no_cm.find("c_m = 1\n"), 8, "");
    const std::string msg = thrown_message([&] { parse_config_text(no_cm, "cfg"); });
    REQUIRE(msg.find("c_m is required") != std::string::npos);
    REQUIRE(msg.find("no published default") != std::string::npos);
  }
  {
    std::string bad = base;
    bad.replace(bad.find("tau_y = 65"), 10, "tau_y = si");
    const std::string msg = thrown_message([&] { parse_config_text(bad, "cfg"); });
    REQUIRE(msg.find("expected a number, got 'si'") != std::string::npos);
    REQUIRE(msg.find("cfg:12: [rheology] tau_y") != std::string::npos);
  }
  {
    const std::string msg = thrown_message(
        [&] { parse_config_text(base + "[gauges]\n0 = 1 2\n", "cfg"); });
    REQUIRE(msg.find("positive integer ids") != std::string::npos);
  }
  {
    const std::string msg = thrown_message(
        [&] { parse_config_text(base + "[gauges]\n1 = 4 5 6\n", "cfg"); });
    REQUIRE(msg.find("expected 'x y'") != std::string::npos);
  }
  {
    const std::string msg =
        thrown_message([&] { parse_config_text("x = 1\n", "cfg"); });
    REQUIRE(msg.find("key outside any [section]") != std::string::npos);
  }
  {
    const std::string msg = thrown_message(
        [&] { parse_config_text(base + "[rheology2]\n", "cfg"); });
    REQUIRE(msg.find("unknown section") != std::string::npos);
  }
}

TEST_CASE("scenario-level consistency rules") {
  // Both a bed raster and a synthetic basin: ambiguous.
  {
    std::string cfg = basin_config("65");
    cfg.replace(cfg.find("name = toy-basin\n"), 17,
                "name = t\nbed_path = b.asc\n");
    REQUIRE_THROWS_AS(parse_config_text(cfg, "cfg"), ConfigError);
  }
  // Neither: nothing to run on.
  {
    const std::string cfg =
        "[scenario]\nname = t\n"
        "[material]\nrho_d = 1500\nrho_w = 1000\nc_m = 1\nc_f = 0.01\nc_p = 1\n"
        "[rheology]\ntau_y = 65\nmu = 10\nn = 0.5\n";
    const std::string msg = thrown_message([&] { parse_config_text(cfg, "cfg"); });
    REQUIRE(msg.find("exactly one") != std::string::npos);
  }
  // A raster scenario with no slide input at all.
  {
    const std::string cfg =
        "[scenario]\nname = t\nbed_path = b.asc\n"
        "[material]\nrho_d = 1500\nrho_w = 1000\nc_m = 1\nc_f = 0.01\nc_p = 1\n"
        "[rheology]\ntau_y = 65\nmu = 10\nn = 0.5\n";
    const std::string msg = thrown_message([&] { parse_config_text(cfg, "cfg"); });
    REQUIRE(msg.find("slide_thickness_path") != std::string::npos);
  }
  // Physical parameter checks propagate from the parameter structs.
  {
    std::string cfg = basin_config("-5");
    REQUIRE_THROWS_AS(parse_config_text(cfg, "cfg"), std::invalid_argument);
  }
  {
    std::string cfg = basin_config("65");
    cfg.replace(cfg.find("n = 1\n"), 6, "n = 1.5\n");
    const std::string msg = thrown_message([&] { parse_config_text(cfg, "cfg"); });
    REQUIRE(msg.find("n must lie in (0, 1]") != std::string::npos);
  }
  // The independent Bingham path demands n = 1.
  {
    std::string cfg = basin_config("65");
    cfg.replace(cfg.find("n = 1\n"), 6, "n = 0.5\nbingham_path = true\n");
    Scenario sc = parse_config_text(cfg, "cfg");
    SlideConfig scfg;
    scfg.hb = sc.hb;
    scfg.mat = sc.material;
    scfg.use_bingham_path = sc.use_bingham_path;
    scfg.t_end = 1.0;
    scfg.bed = ScalarField(GridSpec{4, 4, 1.0, 1.0, 0.0, 0.0}, 0.0);
    REQUIRE_THROWS_AS(scfg.validate(), std::invalid_argument);
  }
}

TEST_CASE("serialization round-trips") {
  const Scenario sc = parse_config_text(basin_config("65"), "inline");
  const std::string text = serialize_config(sc);
  const Scenario back = parse_config_text(text, "round-trip");
  REQUIRE(serialize_config(back) == text);
  REQUIRE(back.basin->slide_volume == sc.basin->slide_volume);
  REQUIRE(back.gauges.size() == sc.gauges.size());
  REQUIRE(back.hb.tau_y == sc.hb.tau_y);
}

TEST_CASE("synthetic basin geometry") {
  const Scenario sc = parse_config_text(basin_config("65"), "inline");
  const auto [bed, thick] = make_synthetic_basin(*sc.basin);

  // Domain size: basin plus margins at the requested cell size.
  REQUIRE(bed.spec.nx == 60);
  REQUIRE(bed.spec.ny == 50);
  REQUIRE(bed.spec.dx == 10.0);
  REQUIRE(bed.spec.x0 == 5.0);

  // Deepest point reaches the nominal depth at the centre; shores rise.
  const FieldStats bs = field_stats(bed);
  REQUIRE(bs.min >= -sc.basin->max_depth - 1e-9);
  REQUIRE(bs.min <= -0.99 * sc.basin->max_depth);
  REQUIRE(bed.at(0, 0) > 0.0);
  REQUIRE(bed.at(59, 49) > 0.0);

  // Discrete mound volume matches the request exactly (by construction).
  const FieldStats ts = field_stats(thick);
  REQUIRE(ts.integral == Catch::Approx(sc.basin->slide_volume).epsilon(1e-12));
  REQUIRE(ts.min == 0.0);
  REQUIRE(ts.max > 0.0);

  // The slide grid must cover the mound and stay inside the domain.
  REQUIRE(thick.spec.x0 >= bed.spec.x0);
  REQUIRE(thick.spec.x_max() <= bed.spec.x_max());

  // Mirror symmetry about the long axis, bit for bit.
  for (int j = 0; j < bed.spec.ny; ++j)
    for (int i = 0; i < bed.spec.nx; ++i)
      REQUIRE(bed.at(i, j) == bed.at(i, bed.spec.ny - 1 - j));
  for (int j = 0; j < thick.spec.ny; ++j)
    for (int i = 0; i < thick.spec.nx; ++i)
      REQUIRE(thick.at(i, j) == thick.at(i, thick.spec.ny - 1 - j));
}

TEST_CASE("synthetic basin rejects impossible layouts") {
  Scenario sc = parse_config_text(basin_config("65"), "inline");
  SyntheticBasinSpec b = *sc.basin;
  b.region_x1 = b.region_x0 + 30.0;  // region no longer contains the mound
  REQUIRE_THROWS_WITH(make_synthetic_basin(b),
                      Catch::Matchers::ContainsSubstring("spills outside"));
  b = *sc.basin;
  b.length = 10.0;
  b.width = 10.0;
  b.margin = 0.0;
  b.cell_size = 10.0;
  REQUIRE_THROWS_AS(make_synthetic_basin(b), std::invalid_argument);
}

TEST_CASE("a parked mound leaves the lake at rest end to end") {
  TempDir tmp("rest");
  Scenario sc = parse_config_text(basin_config("10000000"), "inline");
  RunOptions opt;
  opt.out_dir = (tmp.path / "out").string();
  opt.quiet = true;
  opt.threads = 1;
  REQUIRE(run_coupled(sc, opt) == 0);

  const auto report = read_kv(tmp.path / "out" / "report.txt");
  REQUIRE(report.at("slide_rest_time") == "nan");  // it never started moving
  REQUIRE(std::stod(report.at("slide_steps")) > 0);
  REQUIRE(std::stod(report.at("water_steps")) > 0);
  // Volume bookkeeping agrees to roundoff.
  const double v0 = std::stod(report.at("slide_volume_initial"));
  const double v1 = std::stod(report.at("slide_volume_final"));
  REQUIRE(v0 == Catch::Approx(20000.0).epsilon(1e-12));
  REQUIRE(v1 == Catch::Approx(v0).epsilon(1e-12));
  // No wave: flat gauges, no runup, no inundation.
  REQUIRE(report.at("gauge_1_peak") == "0");
  REQUIRE(report.at("gauge_1_arrival") == "-1");
  REQUIRE(report.at("max_runup_height") == "0");
  REQUIRE(report.at("max_runup_distance") == "0");
  REQUIRE(report.at("inundated_area") == "0");

  // The artifact set is complete.
  for (const char* rel :
       {"slide_steps.csv", "deposit_profile.csv", "dtopo/slide_motion.dtopo",
        "gauges/gauge_1.csv", "gauges/gauge_2.csv", "fields/max_eta.asc",
        "fields/max_speed.asc", "fields/arrival_time.asc", "report.txt", "manifest.txt"}) {
    INFO(rel);
    REQUIRE(fs::exists(tmp.path / "out" / rel));
  }

  const std::string manifest = slurp(tmp.path / "out" / "manifest.txt");
  REQUIRE(manifest.find("threads=1") != std::string::npos);
  REQUIRE(manifest.find("derived.added_mass_factor=") != std::string::npos);
  REQUIRE(manifest.find("config.[scenario]") != std::string::npos);

  // The gauge file has the pinned header and one row per water step.
  const std::string g1 = slurp(tmp.path / "out" / "gauges" / "gauge_1.csv");
  REQUIRE(g1.rfind("t,eta,h,u,v\n", 0) == 0);
  const long rows = std::count(g1.begin(), g1.end(), '\n') - 1;
  REQUIRE(rows == std::stol(report.at("water_steps")));
}

TEST_CASE("coupled runs are bit-reproducible across thread counts") {
  unsetenv("SLIDESURGE_THREADS");
  TempDir tmp("deterministic");
  const Scenario sc = parse_config_text(basin_config("500"), "inline");

  auto run_into = [&](const std::string& leaf, int threads) {
    RunOptions opt;
    opt.out_dir = (tmp.path / leaf).string();
    opt.quiet = true;
    opt.threads = threads;
    REQUIRE(run_coupled(sc, opt) == 0);
  };
  run_into("a", 1);
  run_into("b", 1);  // repeatability
  run_into("c", 3);  // worker-count independence

  for (const char* rel : {"report.txt", "dtopo/slide_motion.dtopo", "slide_steps.csv",
                          "gauges/gauge_1.csv", "fields/max_eta.asc", "deposit_profile.csv"}) {
    INFO(rel);
    const std::string a = slurp(tmp.path / "a" / rel);
    REQUIRE(a == slurp(tmp.path / "b" / rel));
    REQUIRE(a == slurp(tmp.path / "c" / rel));
  }

  // The wave actually happened in this variant (otherwise the comparison
  // proves less than it claims).
  const auto report = read_kv(tmp.path / "a" / "report.txt");
  REQUIRE(std::stod(report.at("gauge_1_peak")) > 0.0);

  // The environment variable overrides the requested worker count.
  setenv("SLIDESURGE_THREADS", "2", 1);
  run_into("d", 1);
  unsetenv("SLIDESURGE_THREADS");
  const std::string manifest = slurp(tmp.path / "d" / "manifest.txt");
  REQUIRE(manifest.find("threads=2") != std::string::npos);
  REQUIRE(slurp(tmp.path / "a" / "report.txt") == slurp(tmp.path / "d" / "report.txt"));
}

TEST_CASE("run_coupled reports failures instead of throwing") {
  TempDir tmp("fail");
  Scenario sc = parse_config_text(basin_config("65"), "inline");
  sc.basin->region_x1 = sc.basin->region_x0 + 30.0;  // mound spills out
  RunOptions opt;
  opt.out_dir = (tmp.path / "out").string();
  opt.quiet = true;
  REQUIRE(run_coupled(sc, opt) == 1);
}
