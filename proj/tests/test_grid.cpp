#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "slidesurge/esri_ascii.hpp"
#include "slidesurge/grid.hpp"

using namespace slidesurge;

namespace {

GridSpec small_spec(int nx = 5, int ny = 4, double d = 2.0) {
  GridSpec g;
  g.nx = nx;
  g.ny = ny;
  g.dx = g.dy = d;
  g.x0 = 10.0;
  g.y0 = 20.0;
  return g;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("grid spec validation") {
  GridSpec g = small_spec();
  REQUIRE_NOTHROW(g.validate());
  g.nx = 0;
  REQUIRE_THROWS_AS(g.validate(), std::invalid_argument);
  g = small_spec();
  g.dx = -1.0;
  REQUIRE_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("grid indexing and coordinates") {
  GridSpec g = small_spec();
  REQUIRE(g.idx(0, 0) == 0);
  REQUIRE(g.idx(4, 0) == 4);
  REQUIRE(g.idx(0, 1) == 5);
  REQUIRE(g.x_of(0) == 10.0);
  REQUIRE(g.x_of(4) == 18.0);
  REQUIRE(g.y_max() == 26.0);
  REQUIRE(g.cell_area() == 4.0);
}

TEST_CASE("bilinear sample is exact at cell centres") {
  ScalarField f(small_spec());
  for (int j = 0; j < f.spec.ny; ++j)
    for (int i = 0; i < f.spec.nx; ++i) f.at(i, j) = 3.0 * i - 7.0 * j + 0.25;
  for (int j = 0; j < f.spec.ny; ++j)
    for (int i = 0; i < f.spec.nx; ++i)
      REQUIRE(bilinear_sample(f, f.spec.x_of(i), f.spec.y_of(j)) == f.at(i, j));
}

TEST_CASE("bilinear sample reproduces linear fields between centres") {
  ScalarField f(small_spec());
  auto plane = [](double x, double y) { return 0.5 * x - 1.25 * y + 3.0; };
  for (int j = 0; j < f.spec.ny; ++j)
    for (int i = 0; i < f.spec.nx; ++i) f.at(i, j) = plane(f.spec.x_of(i), f.spec.y_of(j));
  REQUIRE(bilinear_sample(f, 11.3, 21.7) == Catch::Approx(plane(11.3, 21.7)).margin(1e-12));
  REQUIRE(bilinear_sample(f, 17.9, 25.9) == Catch::Approx(plane(17.9, 25.9)).margin(1e-12));
}

TEST_CASE("bilinear sample rejects points outside the hull") {
  ScalarField f(small_spec());
  REQUIRE_THROWS_AS(bilinear_sample(f, 9.0, 21.0), std::out_of_range);
  REQUIRE_THROWS_AS(bilinear_sample(f, 11.0, 26.5), std::out_of_range);
  // a tolerance of ~1e-9 cells beyond the edge clamps instead of throwing
  REQUIRE_NOTHROW(bilinear_sample(f, f.spec.x0 - 1e-10, f.spec.y0));
}

TEST_CASE("resample with identical geometry copies values exactly") {
  ScalarField f(small_spec());
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = 0.1 * k - 3.0;
  GridSpec target = f.spec;
  target.nodata = -1234.0;
  ScalarField r = resample(f, target);
  REQUIRE(r.spec.nodata == -1234.0);
  REQUIRE(r.values == f.values);
}

TEST_CASE("resample onto a coarser interior grid interpolates") {
  ScalarField f(small_spec(9, 9, 1.0));
  auto plane = [](double x, double y) { return 2.0 * x + y; };
  for (int j = 0; j < 9; ++j)
    for (int i = 0; i < 9; ++i) f.at(i, j) = plane(f.spec.x_of(i), f.spec.y_of(j));

  GridSpec coarse;
  coarse.nx = 3;
  coarse.ny = 3;
  coarse.dx = coarse.dy = 2.0;
  coarse.x0 = f.spec.x0 + 1.5;
  coarse.y0 = f.spec.y0 + 1.5;
  ScalarField r = resample(f, coarse);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      REQUIRE(r.at(i, j) == Catch::Approx(plane(coarse.x_of(i), coarse.y_of(j))).margin(1e-12));
}

TEST_CASE("field stats integrate non-nodata cells") {
  ScalarField f(small_spec());
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = 2.5;
  f.values[3] = f.spec.nodata;
  const FieldStats s = field_stats(f);
  REQUIRE(s.valid_cells == f.values.size() - 1);
  REQUIRE(s.nodata_cells == 1);
  REQUIRE(s.min == 2.5);
  REQUIRE(s.max == 2.5);
  REQUIRE(s.integral == Catch::Approx(2.5 * (f.values.size() - 1) * 4.0));
}

TEST_CASE("esri ascii round trip preserves values bitwise") {
  ScalarField f(small_spec());
  f.values = {0.1,  -2.75, 1e-17, 12345.678901234567, -9999.0,
              3.25, 0.0,   -0.0,  7.1,  2.0,
              0.5,  1.5,   2.5,   3.5,  4.5,
              9.0,  8.0,   7.0,   6.0,  5.0};
  const std::string path = temp_path("slidesurge_roundtrip.asc");
  write_esri_ascii(path, f);
  ScalarField r = read_esri_ascii(path);
  REQUIRE(r.spec.same_geometry(f.spec));
  REQUIRE(r.spec.nodata == f.spec.nodata);
  REQUIRE(r.values == f.values);
  std::filesystem::remove(path);
}

TEST_CASE("esri ascii reader handles corner and centre origin conventions") {
  const std::string path = temp_path("slidesurge_corner.asc");
  {
    std::ofstream out(path);
    out << "ncols 2\nnrows 2\nxllcorner 100\nyllcorner 200\ncellsize 10\n"
        << "NODATA_value -9999\n1 2\n3 4\n";
  }
  ScalarField f = read_esri_ascii(path);
  REQUIRE(f.spec.x0 == 105.0);  // corner + cellsize/2
  REQUIRE(f.spec.y0 == 205.0);
  // first data row is the top row
  REQUIRE(f.at(0, 1) == 1.0);
  REQUIRE(f.at(1, 1) == 2.0);
  REQUIRE(f.at(0, 0) == 3.0);
  REQUIRE(f.at(1, 0) == 4.0);
  std::filesystem::remove(path);
}

TEST_CASE("esri ascii reader rejects malformed input") {
  const std::string bad_key = temp_path("slidesurge_badkey.asc");
  {
    std::ofstream out(bad_key);
    out << "ncols 2\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\nwibble 3\n1 2\n";
  }
  REQUIRE_THROWS_WITH(read_esri_ascii(bad_key), Catch::Matchers::ContainsSubstring("wibble"));
  std::filesystem::remove(bad_key);

  const std::string short_data = temp_path("slidesurge_short.asc");
  {
    std::ofstream out(short_data);
    out << "ncols 3\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3 4\n";
  }
  REQUIRE_THROWS_AS(read_esri_ascii(short_data), std::runtime_error);
  std::filesystem::remove(short_data);

  const std::string extra = temp_path("slidesurge_extra.asc");
  {
    std::ofstream out(extra);
    out << "ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2\n";
  }
  REQUIRE_THROWS_AS(read_esri_ascii(extra), std::runtime_error);
  std::filesystem::remove(extra);
}

TEST_CASE("esri ascii writer requires square cells") {
  GridSpec g = small_spec();
  g.dy = 3.0;
  ScalarField f(g);
  REQUIRE_THROWS_AS(write_esri_ascii(temp_path("slidesurge_rect.asc"), f),
                    std::invalid_argument);
}
