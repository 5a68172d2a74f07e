#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidesurge/coupling.hpp"

using namespace slidesurge;
namespace fs = std::filesystem;

namespace {

GridSpec make_spec(int nx, int ny, double d, double x0 = 0.0, double y0 = 0.0) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.dx = d;
  g.dy = d;
  g.x0 = x0;
  g.y0 = y0;
  return g;
}

ScalarField numbered_field(const GridSpec& g, double offset) {
  ScalarField f(g, 0.0);
  for (std::size_t k = 0; k < f.values.size(); ++k)
    f.values[k] = offset + 0.37 * static_cast<double>(k);
  return f;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / "slidesurge-coupling-tests";
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string thrown_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("series validation") {
  const GridSpec g = make_spec(3, 2, 1.0);
  BedMotionSeries s;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s.frames.push_back({1.0, ScalarField(g, 0.0)});
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);  // first frame not at t = 0

  s.frames.clear();
  s.frames.push_back({0.0, ScalarField(g, 0.0)});
  s.frames.push_back({2.0, ScalarField(g, 1.0)});
  REQUIRE_NOTHROW(s.validate());
  REQUIRE(s.t_last() == 2.0);

  s.frames.push_back({2.0, ScalarField(g, 2.0)});  // not strictly increasing
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s.frames.back().t = 3.0;
  s.frames.back().field = ScalarField(make_spec(4, 2, 1.0), 0.0);  // other grid
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("frame recorder keeps a fixed cadence") {
  REQUIRE_THROWS_AS(FrameRecorder(0.0), std::invalid_argument);

  const GridSpec g = make_spec(2, 2, 1.0);
  FrameRecorder rec(0.5);
  REQUIRE(rec.due(0.0));
  rec.offer(0.0, ScalarField(g, 0.0));
  REQUIRE(rec.next_time() == 0.5);
  rec.offer(0.3, ScalarField(g, 1.0));  // off cadence: dropped
  rec.offer(0.7, ScalarField(g, 2.0));  // past the due time: stored
  REQUIRE(rec.next_time() == 1.0);
  rec.offer(1.0 - 1e-12, ScalarField(g, 3.0));  // an ulp short still counts
  rec.force(1.1, ScalarField(g, 4.0));          // forced regardless of cadence
  rec.force(1.1, ScalarField(g, 5.0));          // same time: ignored

  const BedMotionSeries s = rec.take();
  REQUIRE(s.frames.size() == 4);
  REQUIRE(s.frames[0].t == 0.0);
  REQUIRE(s.frames[1].t == 0.7);
  REQUIRE(s.frames[2].t == 1.0 - 1e-12);
  REQUIRE(s.frames[3].t == 1.1);
  REQUIRE(s.frames[3].field.values[0] == 4.0);
}

TEST_CASE("record_frames captures the cadence plus the final state") {
  const GridSpec g = make_spec(2, 2, 1.0);
  const BedMotionSeries s = record_frames(
      [&](const std::function<void(double, const ScalarField&)>& sink) {
        for (double t : {0.0, 0.3, 0.7, 1.0, 1.2}) sink(t, ScalarField(g, t));
      },
      0.5);
  REQUIRE(s.frames.size() == 4);
  REQUIRE(s.frames[0].t == 0.0);
  REQUIRE(s.frames[1].t == 0.7);
  REQUIRE(s.frames[2].t == 1.0);
  REQUIRE(s.frames[3].t == 1.2);  // final state forced
  REQUIRE(s.frames[3].field.values[0] == 1.2);
}

TEST_CASE("bed lookup interpolates between bracketing frames") {
  const GridSpec g = make_spec(4, 3, 2.0);
  BedMotionSeries s;
  s.frames.push_back({0.0, numbered_field(g, 0.0)});
  s.frames.push_back({2.0, numbered_field(g, 10.0)});
  s.frames.push_back({6.0, numbered_field(g, -4.0)});

  REQUIRE_THROWS_AS(bed_at_time(s, -1.0, g), std::invalid_argument);

  // Exactly at a frame time: that frame, bit for bit.
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    const ScalarField b = bed_at_time(s, s.frames[f].t, g);
    REQUIRE(std::memcmp(b.values.data(), s.frames[f].field.values.data(),
                        b.values.size() * sizeof(double)) == 0);
  }

  // Clamped outside the recorded window.
  const ScalarField late = bed_at_time(s, 100.0, g);
  REQUIRE(late.values == s.frames.back().field.values);

  // Strictly between frames: the linear blend, computed the same way.
  const double t = 3.0;
  const double w = (t - 2.0) / (6.0 - 2.0);
  const ScalarField mid = bed_at_time(s, t, g);
  for (std::size_t k = 0; k < mid.values.size(); ++k) {
    const double a = s.frames[1].field.values[k];
    const double b = s.frames[2].field.values[k];
    REQUIRE(mid.values[k] == a + w * (b - a));
  }
}

TEST_CASE("bed lookup resamples onto a different grid") {
  // Linear surface: bilinear resampling reproduces it exactly (to roundoff).
  const GridSpec coarse = make_spec(6, 5, 4.0);
  auto linear = [&](double add) {
    ScalarField f(coarse, 0.0);
    for (int j = 0; j < coarse.ny; ++j)
      for (int i = 0; i < coarse.nx; ++i)
        f.at(i, j) = 2.0 * coarse.x_of(i) - 3.0 * coarse.y_of(j) + add;
    return f;
  };
  BedMotionSeries s;
  s.frames.push_back({0.0, linear(1.0)});
  s.frames.push_back({4.0, linear(2.0)});

  const GridSpec fine = make_spec(9, 7, 2.0, 1.0, 1.0);  // inside the coarse hull
  const ScalarField b = bed_at_time(s, 1.0, fine);
  REQUIRE(b.spec.same_geometry(fine));
  for (int j = 0; j < fine.ny; ++j)
    for (int i = 0; i < fine.nx; ++i) {
      const double expect = 2.0 * fine.x_of(i) - 3.0 * fine.y_of(j) + 1.25;
      REQUIRE(b.at(i, j) == Catch::Approx(expect).margin(1e-9));
    }
}

TEST_CASE("motion series round-trips through the dtopo file") {
  TempDir tmp;
  const GridSpec g = make_spec(5, 4, 2.5, 137.25, -40.5);
  BedMotionSeries s;
  s.frames.push_back({0.0, numbered_field(g, -3.125)});
  s.frames.push_back({1.5, numbered_field(g, 0.2)});
  s.frames.push_back({7.0, numbered_field(g, 1e-7)});

  const std::string path = (tmp.path / "motion.dtopo").string();
  export_dtopo(s, path);
  const BedMotionSeries r = import_dtopo(path);

  REQUIRE(r.frames.size() == s.frames.size());
  REQUIRE(r.spec().same_geometry(g));
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    REQUIRE(r.frames[f].t == s.frames[f].t);
    REQUIRE(std::memcmp(r.frames[f].field.values.data(), s.frames[f].field.values.data(),
                        g.cell_count() * sizeof(double)) == 0);
  }
}

TEST_CASE("dtopo export requires square cells") {
  GridSpec g = make_spec(3, 3, 1.0);
  g.dy = 2.0;
  BedMotionSeries s;
  s.frames.push_back({0.0, ScalarField(g, 0.0)});
  REQUIRE_THROWS_AS(export_dtopo(s, "/dev/null"), std::invalid_argument);
}

TEST_CASE("dtopo import rejects malformed files with line numbers") {
  TempDir tmp;
  auto write = [&](const std::string& name, const std::string& body) {
    const std::string path = (tmp.path / name).string();
    std::ofstream out(path);
    out << body;
    return path;
  };
  const std::string header =
      "SLIDESURGE-DTOPO 1\nnframes 1\nncols 2\nnrows 2\nx0 0\ny0 0\ncellsize 1\n";

  {
    const std::string p = write("magic.dtopo", "SOMETHING-ELSE 1\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("expected 'SLIDESURGE-DTOPO'") != std::string::npos);
    REQUIRE(msg.find(":1:") != std::string::npos);
  }
  {
    const std::string p = write("version.dtopo", "SLIDESURGE-DTOPO 9\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("version") != std::string::npos);
  }
  {
    const std::string p = write("first.dtopo", header + "t 1\n0 0\n0 0\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("first frame must be at t = 0") != std::string::npos);
  }
  {
    const std::string p = write("order.dtopo",
                                "SLIDESURGE-DTOPO 1\nnframes 2\nncols 2\nnrows 2\n"
                                "x0 0\ny0 0\ncellsize 1\n"
                                "t 0\n0 0\n0 0\nt 0\n1 1\n1 1\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("strictly increasing") != std::string::npos);
  }
  {
    const std::string p = write("short.dtopo", header + "t 0\n0 0\n0\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("unexpected end of file") != std::string::npos);
  }
  {
    const std::string p = write("trailing.dtopo", header + "t 0\n0 0\n0 0\nextra\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find("trailing content") != std::string::npos);
    REQUIRE(msg.find(":11:") != std::string::npos);
  }
  {
    const std::string p = write("notnum.dtopo", header + "t 0\n0 zero\n0 0\n");
    const std::string msg = thrown_message([&] { import_dtopo(p); });
    REQUIRE(msg.find(":9:") != std::string::npos);
  }
  {
    REQUIRE_THROWS_AS(import_dtopo((tmp.path / "missing.dtopo").string()), std::runtime_error);
  }
}
