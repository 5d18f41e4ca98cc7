#include "cli/output.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

#include "sloppykit/error.hpp"

namespace sloppykit::cli {

namespace {

constexpr double kCanvas = 600.0;
constexpr double kMargin = 60.0;
constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

nlohmann::json json_number(double v, bool plus_sign) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? (plus_sign ? "+inf" : "inf") : "-inf";
  return v;
}

nlohmann::json json_vector(const Vector& v) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
  return out;
}

nlohmann::json json_matrix(const Matrix& m) {
  auto out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(json_vector(m.row(i).transpose()));
  return out;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  std::filesystem::create_directories(dir);
  const auto tmp = dir / fmt::format(".{}.tmp.{}", path.filename().string(), static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorCode::InvalidArgument, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string render_svg(const LevelSetGrid& grid, const std::vector<double>& levels,
                       const std::vector<std::vector<Polyline>>& contours) {
  const double span = kCanvas - 2.0 * kMargin;
  auto sx = [&](double x) { return kMargin + (x - grid.x.lo) / (grid.x.hi - grid.x.lo) * span; };
  auto sy = [&](double y) { return kCanvas - kMargin - (y - grid.y.lo) / (grid.y.hi - grid.y.lo) * span; };

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" height=\"{0}\" "
      "viewBox=\"0 0 {0} {0}\">\n",
      kCanvas);
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{0}\" fill=\"white\"/>\n", kCanvas);
  svg += fmt::format("<rect x=\"{0}\" y=\"{0}\" width=\"{1}\" height=\"{1}\" fill=\"none\" stroke=\"black\"/>\n",
                     kMargin, span);

  // Axis annotations: end ticks and coordinate names.
  const double bottom = kCanvas - kMargin;
  svg += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"black\">\n";
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.6g}</text>\n", kMargin, bottom + 18, grid.x.lo);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{:.6g}</text>\n", kCanvas - kMargin, bottom + 18,
                     grid.x.hi);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.6g}</text>\n", kMargin - 6, bottom + 4, grid.y.lo);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.6g}</text>\n", kMargin - 6, kMargin + 4,
                     grid.y.hi);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">p{}</text>\n", kCanvas / 2, bottom + 36,
                     grid.x.index + 1);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">p{}</text>\n", 20,
                     kCanvas / 2, 20, kCanvas / 2, grid.y.index + 1);
  svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", kCanvas / 2, 30,
                     grid.sqrt_mode ? "level sets of sqrt(d)" : "level sets of d");
  svg += "</g>\n";

  for (std::size_t k = 0; k < contours.size(); ++k) {
    const char* color = kColors[k % kColors.size()];
    svg += fmt::format("<g stroke=\"{}\" fill=\"none\" stroke-width=\"1.5\" data-level=\"{:.17g}\">\n", color,
                       levels[k]);
    for (const auto& line : contours[k]) {
      if (line.vertices.size() < 2) continue;
      std::string d;
      for (std::size_t v = 0; v < line.vertices.size(); ++v) {
        d += fmt::format("{}{:.3f} {:.3f} ", v == 0 ? "M" : "L", sx(line.vertices[v].x()), sy(line.vertices[v].y()));
      }
      if (line.closed) d += "Z";
      svg += fmt::format("<path d=\"{}\"/>\n", d);
    }
    svg += "</g>\n";
  }
  const double px = grid.p0(grid.x.index);
  const double py = grid.p0(grid.y.index);
  if (px >= grid.x.lo && px <= grid.x.hi && py >= grid.y.lo && py <= grid.y.hi) {
    svg += fmt::format("<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"3\" fill=\"black\"/>\n", sx(px), sy(py));
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace sloppykit::cli
