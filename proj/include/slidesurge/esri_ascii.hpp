#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

#include "slidesurge/grid.hpp"

namespace slidesurge {

/// Formats a double with the shortest decimal digit string that round-trips
/// to the identical bits, so written rasters reload without loss.
inline std::string format_double(double v) {
  std::array<char, 40> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc())
    throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), res.ptr);
}

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline double parse_number(const std::string& tok, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw std::runtime_error("esri_ascii: " + what + " is not a number: '" + tok + "'");
  return v;
}

}  // namespace detail

/// Reads an ESRI ASCII raster.  Both xllcorner/yllcorner and
/// xllcenter/yllcenter georeferencing are accepted; the stored origin is
/// always the lower-left cell center.  The file's first data row is the
/// *top* row; storage is bottom-row-first.
inline ScalarField read_esri_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("esri_ascii: cannot open '" + path + "' for reading");

  int ncols = -1, nrows = -1;
  double xll = 0.0, yll = 0.0, cellsize = -1.0, nodata = -9999.0;
  bool have_x = false, have_y = false, x_is_center = false, y_is_center = false;
  bool have_nodata = false;

  // Header: lines of "key value" until the first purely numeric token.
  std::string tok;
  std::streampos data_start = in.tellg();
  while (true) {
    data_start = in.tellg();
    if (!(in >> tok)) throw std::runtime_error("esri_ascii: '" + path + "' has no data values");
    const std::string key = detail::lower(tok);
    // A token counts as a header key if it starts with a letter and is not
    // itself a number (so "nan" data cannot be mistaken for a key).
    double probe = 0.0;
    const auto pr = std::from_chars(key.data(), key.data() + key.size(), probe);
    const bool numeric = pr.ec == std::errc() && pr.ptr == key.data() + key.size();
    const bool is_key =
        !numeric && !key.empty() &&
        (std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_');
    if (!is_key) break;
    std::string val;
    if (!(in >> val))
      throw std::runtime_error("esri_ascii: header key '" + key + "' in '" + path + "' has no value");
    if (key == "ncols") {
      ncols = static_cast<int>(detail::parse_number(val, "ncols"));
    } else if (key == "nrows") {
      nrows = static_cast<int>(detail::parse_number(val, "nrows"));
    } else if (key == "xllcorner" || key == "xllcenter") {
      xll = detail::parse_number(val, key);
      have_x = true;
      x_is_center = (key == "xllcenter");
    } else if (key == "yllcorner" || key == "yllcenter") {
      yll = detail::parse_number(val, key);
      have_y = true;
      y_is_center = (key == "yllcenter");
    } else if (key == "cellsize") {
      cellsize = detail::parse_number(val, "cellsize");
    } else if (key == "nodata_value") {
      nodata = detail::parse_number(val, "nodata_value");
      have_nodata = true;
    } else {
      throw std::runtime_error("esri_ascii: unknown header key '" + key + "' in '" + path + "'");
    }
  }
  (void)have_nodata;

  if (ncols < 1) throw std::runtime_error("esri_ascii: missing or invalid ncols in '" + path + "'");
  if (nrows < 1) throw std::runtime_error("esri_ascii: missing or invalid nrows in '" + path + "'");
  if (!have_x) throw std::runtime_error("esri_ascii: missing xllcorner/xllcenter in '" + path + "'");
  if (!have_y) throw std::runtime_error("esri_ascii: missing yllcorner/yllcenter in '" + path + "'");
  if (!(cellsize > 0.0)) throw std::runtime_error("esri_ascii: missing or invalid cellsize in '" + path + "'");

  GridSpec spec;
  spec.nx = ncols;
  spec.ny = nrows;
  spec.dx = spec.dy = cellsize;
  spec.x0 = x_is_center ? xll : xll + 0.5 * cellsize;
  spec.y0 = y_is_center ? yll : yll + 0.5 * cellsize;
  spec.nodata = nodata;
  spec.validate();

  // Data: exactly ncols * nrows values, top row first.
  in.clear();
  in.seekg(data_start);
  ScalarField field(spec, 0.0);
  const std::size_t expected = spec.cell_count();
  std::size_t count = 0;
  while (count < expected && (in >> tok)) {
    const double v = detail::parse_number(tok, "data value " + std::to_string(count));
    const std::size_t file_row = count / static_cast<std::size_t>(ncols);
    const std::size_t col = count % static_cast<std::size_t>(ncols);
    const std::size_t j = static_cast<std::size_t>(nrows) - 1 - file_row;
    field.values[j * static_cast<std::size_t>(ncols) + col] = v;
    ++count;
  }
  if (count < expected)
    throw std::runtime_error("esri_ascii: '" + path + "' has " + std::to_string(count) +
                             " data values, expected " + std::to_string(expected));
  if (in >> tok)
    throw std::runtime_error("esri_ascii: '" + path + "' has trailing data beyond the expected " +
                             std::to_string(expected) + " values");
  return field;
}

/// Writes an ESRI ASCII raster (cell-center georeferencing keys, so the
/// origin round-trips bit-exactly).  The format carries a single cellsize,
/// hence dx must equal dy.
inline void write_esri_ascii(const std::string& path, const ScalarField& field) {
  field.check_consistent();
  const GridSpec& g = field.spec;
  if (g.dx != g.dy)
    throw std::invalid_argument("esri_ascii: format requires square cells, got dx=" +
                                std::to_string(g.dx) + ", dy=" + std::to_string(g.dy));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("esri_ascii: cannot open '" + path + "' for writing");
  out << "ncols " << g.nx << "\n";
  out << "nrows " << g.ny << "\n";
  out << "xllcenter " << format_double(g.x0) << "\n";
  out << "yllcenter " << format_double(g.y0) << "\n";
  out << "cellsize " << format_double(g.dx) << "\n";
  out << "NODATA_value " << format_double(g.nodata) << "\n";
  std::string line;
  for (int j = g.ny - 1; j >= 0; --j) {
    line.clear();
    for (int i = 0; i < g.nx; ++i) {
      if (i) line += ' ';
      line += format_double(field.at(i, j));
    }
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("esri_ascii: write to '" + path + "' failed");
}

}  // namespace slidesurge
