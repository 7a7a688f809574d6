// Plot writer: structural checks on the emitted SVG.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "kfl/svg.hpp"

using namespace kfl;

TEST_CASE("plots contain the chrome and one polyline per line series") {
  PlotSeries line{{0.0, 1.0, 2.0}, {0.0, 1.0, 4.0}, "growth", true};
  PlotSeries dots{{0.5, 1.5}, {2.0, 3.0}, "samples", false};
  const std::string path = "svg-test-plot.svg";
  write_svg_plot(path, {line, dots}, "a title", "xs", "ys");

  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  REQUIRE(text.rfind("<svg", 0) == 0);
  REQUIRE(text.find("a title") != std::string::npos);
  REQUIRE(text.find("growth") != std::string::npos);
  REQUIRE(text.find("samples") != std::string::npos);

  std::size_t polylines = 0;
  for (std::size_t p = text.find("<polyline"); p != std::string::npos;
       p = text.find("<polyline", p + 1))
    ++polylines;
  REQUIRE(polylines == 1);  // the scatter series draws circles only
  REQUIRE(text.find("<circle") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("plot writing fails loudly on an unwritable path") {
  try {
    write_svg_plot("no-such-dir/plot.svg", {}, "t", "x", "y");
    FAIL("expected an IO failure");
  } catch (const Error& e) {
    REQUIRE(e.code() == ErrorCode::IOError);
  }
}

TEST_CASE("empty series still produce a valid canvas") {
  const std::string path = "svg-test-empty.svg";
  write_svg_plot(path, {}, "empty", "x", "y");
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  REQUIRE(ss.str().find("</svg>") != std::string::npos);
  std::remove(path.c_str());
}
