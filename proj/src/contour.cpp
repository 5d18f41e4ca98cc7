#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "sloppykit/multiscale.hpp"

namespace sloppykit {

namespace {

// Edge crossings are keyed by (orientation, i, j): orientation 0 is the
// edge (i, j)-(i+1, j), orientation 1 the edge (i, j)-(i, j+1).
using EdgeKey = std::tuple<int, int, int>;

struct Segment {
  EdgeKey a;
  EdgeKey b;
};

Eigen::Vector2d crossing(const LevelSetGrid& grid, const EdgeKey& key, double level) {
  const auto [o, i, j] = key;
  const int i2 = o == 0 ? i + 1 : i;
  const int j2 = o == 0 ? j : j + 1;
  const double va = grid.values(i, j);
  const double vb = grid.values(i2, j2);
  const double t = (level - va) / (vb - va);
  const double x = grid.x.coord(i) + t * (grid.x.coord(i2) - grid.x.coord(i));
  const double y = grid.y.coord(j) + t * (grid.y.coord(j2) - grid.y.coord(j));
  return {x, y};
}

std::vector<Segment> cell_segments(const LevelSetGrid& grid, int i, int j, double level) {
  // Corners counterclockwise from (i, j); edge k joins corner k and k+1.
  const std::array<double, 4> v = {grid.values(i, j), grid.values(i + 1, j), grid.values(i + 1, j + 1),
                                   grid.values(i, j + 1)};
  for (double x : v) {
    if (std::isnan(x)) return {};
  }
  const std::array<EdgeKey, 4> edge = {EdgeKey{0, i, j}, EdgeKey{1, i + 1, j}, EdgeKey{0, i, j + 1},
                                       EdgeKey{1, i, j}};
  std::array<bool, 4> above{};
  for (int k = 0; k < 4; ++k) above[k] = v[k] > level;

  std::vector<int> crossed;
  for (int k = 0; k < 4; ++k) {
    if (above[k] != above[(k + 1) % 4]) crossed.push_back(k);
  }
  if (crossed.size() == 2) return {{edge[crossed[0]], edge[crossed[1]]}};
  if (crossed.size() != 4) return {};

  // Saddle: corners on the other side of the center value are cut off.
  const bool center_above = 0.25 * (v[0] + v[1] + v[2] + v[3]) > level;
  std::vector<Segment> out;
  for (int k = 0; k < 4; ++k) {
    if (above[k] != center_above) out.push_back({edge[(k + 3) % 4], edge[k]});
  }
  return out;
}

std::vector<Polyline> trace_level(const LevelSetGrid& grid, double level) {
  std::vector<Segment> segments;
  for (int i = 0; i + 1 < grid.x.resolution; ++i) {
    for (int j = 0; j + 1 < grid.y.resolution; ++j) {
      for (const auto& s : cell_segments(grid, i, j, level)) segments.push_back(s);
    }
  }
  std::map<EdgeKey, std::vector<int>> incident;
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    incident[segments[s].a].push_back(s);
    incident[segments[s].b].push_back(s);
  }
  std::vector<char> used(segments.size(), 0);

  auto walk = [&](int first, const EdgeKey& from) {
    std::vector<EdgeKey> chain{from};
    int s = first;
    EdgeKey at = from;
    while (s >= 0 && !used[s]) {
      used[s] = 1;
      at = segments[s].a == at ? segments[s].b : segments[s].a;
      chain.push_back(at);
      int next = -1;
      for (int t : incident[at]) {
        if (!used[t]) next = t;
      }
      s = next;
    }
    return chain;
  };
  auto to_polyline = [&](const std::vector<EdgeKey>& chain) {
    Polyline line;
    line.closed = chain.size() > 2 && chain.front() == chain.back();
    const std::size_t n = line.closed ? chain.size() - 1 : chain.size();
    for (std::size_t k = 0; k < n; ++k) line.vertices.push_back(crossing(grid, chain[k], level));
    return line;
  };

  std::vector<Polyline> out;
  // Open chains start at crossings with a single incident segment.
  for (const auto& [key, list] : incident) {
    if (list.size() != 1 || used[list[0]]) continue;
    out.push_back(to_polyline(walk(list[0], key)));
  }
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    if (!used[s]) out.push_back(to_polyline(walk(s, segments[s].a)));
  }
  return out;
}

}  // namespace

std::vector<std::vector<Polyline>> contour_polylines(const LevelSetGrid& grid, const std::vector<double>& levels) {
  std::vector<std::vector<Polyline>> out;
  out.reserve(levels.size());
  for (double level : levels) out.push_back(trace_level(grid, level));
  return out;
}

}  // namespace sloppykit
