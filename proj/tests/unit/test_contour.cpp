#include <doctest.h>

#include <cmath>

#include "sloppykit/multiscale.hpp"

using namespace sloppykit;

namespace {

LevelSetGrid field(int n, double lo, double hi, const std::function<double(double, double)>& f) {
  LevelSetGrid g;
  g.x = {0, lo, hi, n};
  g.y = {1, lo, hi, n};
  g.values.resize(n, n);
  g.p0 = Vector::Zero(2);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g.values(i, j) = f(g.x.coord(i), g.y.coord(j));
  }
  return g;
}

}  // namespace

TEST_CASE("circle level set is one closed polyline near the unit circle") {
  const auto g = field(81, -2, 2, [](double x, double y) { return x * x + y * y; });
  const auto lines = contour_polylines(g, {1.0});
  REQUIRE(lines.size() == 1);
  REQUIRE(lines[0].size() == 1);
  const Polyline& pl = lines[0][0];
  CHECK(pl.closed);
  CHECK(pl.vertices.size() > 20);
  const double diag = std::sqrt(2.0) * g.x.spacing();
  for (const auto& v : pl.vertices) CHECK(std::abs(v.norm() - 1) <= diag);
  // Consecutive vertices are neighbors along the curve.
  for (std::size_t k = 0; k < pl.vertices.size(); ++k) {
    const auto& a = pl.vertices[k];
    const auto& b = pl.vertices[(k + 1) % pl.vertices.size()];
    CHECK((a - b).norm() <= diag + 1e-12);
  }
}

TEST_CASE("levels outside the value range give nothing") {
  const auto g = field(21, -2, 2, [](double x, double y) { return x * x + y * y; });
  const auto lines = contour_polylines(g, {-1.0, 100.0});
  REQUIRE(lines.size() == 2);
  CHECK(lines[0].empty());
  CHECK(lines[1].empty());
}

TEST_CASE("two blobs give two closed polylines") {
  const auto g = field(101, -4, 4, [](double x, double y) {
    return std::min((x - 1.5) * (x - 1.5) + y * y, (x + 1.5) * (x + 1.5) + y * y);
  });
  // Minima 0, saddle at the origin with value 2.25.
  const auto lines = contour_polylines(g, {1.0, 4.0});
  CHECK(lines[0].size() == 2);
  for (const auto& pl : lines[0]) CHECK(pl.closed);
  CHECK(lines[1].size() == 1);
}

TEST_CASE("contours crossing the border are open") {
  const auto g = field(41, -1, 1, [](double x, double) { return x; });
  const auto lines = contour_polylines(g, {0.26});
  REQUIRE(lines[0].size() == 1);
  const Polyline& pl = lines[0][0];
  CHECK_FALSE(pl.closed);
  CHECK(pl.vertices.size() == 41);
  for (const auto& v : pl.vertices) CHECK(v.x() == doctest::Approx(0.26).epsilon(1e-12));
}

TEST_CASE("missing cells split contours") {
  auto g = field(41, -2, 2, [](double x, double y) { return x * x + y * y; });
  for (int j = 0; j < 41; ++j) g.values(30, j) = std::nan("");
  const auto lines = contour_polylines(g, {1.0});
  REQUIRE(lines[0].size() == 1);
  CHECK_FALSE(lines[0][0].closed);
  for (const auto& v : lines[0][0].vertices) CHECK(v.allFinite());
}

TEST_CASE("saddle cells resolve by the center average") {
  LevelSetGrid g;
  g.x = {0, 0, 1, 2};
  g.y = {1, 0, 1, 2};
  g.values.resize(2, 2);
  g.values << 1, 0, 0, 1;  // center average 0.5
  const auto high = contour_polylines(g, {0.4});
  const auto low = contour_polylines(g, {0.6});
  REQUIRE(high[0].size() == 2);
  REQUIRE(low[0].size() == 2);
  // Level below the center: the low corners are cut off. Above: the high corners.
  for (const auto& pl : high[0]) {
    const Eigen::Vector2d mid = (pl.vertices.front() + pl.vertices.back()) / 2;
    CHECK(std::abs(mid.x() - mid.y()) > 0.3);
  }
  for (const auto& pl : low[0]) {
    const Eigen::Vector2d mid = (pl.vertices.front() + pl.vertices.back()) / 2;
    CHECK(std::abs(mid.x() - mid.y()) < 1e-12);
  }
}
