#include "cli/commands.hpp"

#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cli/output.hpp"
#include "sloppykit/error.hpp"
#include "sloppykit/models.hpp"
#include "sloppykit/premetric.hpp"

namespace sloppykit::cli {

using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json sphere_point_json(const SpherePoint& sp) {
  return {{"direction", json_vector(sp.direction)},
          {"radius", json_number(sp.radius)},
          {"point", json_vector(sp.point)},
          {"feasible", sp.feasible},
          {"value", json_number(sp.value)}};
}

}  // namespace

void cmd_fim(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const FimReport report = fim(cfg.model, *cfg.p0, cfg.fim);
  spdlog::info("fim: rank {} of {}, condition number {}", report.numerical_rank, cfg.model.dim(),
               report.condition_number);
  if (report.one_sided) spdlog::warn("fim: one-sided differences were used at the boundary of P");
  json doc = {{"model", cfg.model.name},
              {"p0", json_vector(*cfg.p0)},
              {"fim", json_matrix(report.fim)},
              {"eigenvalues", json_vector(report.eigen.eigenvalues)},
              {"eigenvectors", json_matrix(report.eigen.eigenvectors)},
              {"singular_values", json_vector(report.singular_values)},
              {"condition_number", json_number(report.condition_number)},
              {"rank", report.numerical_rank},
              {"class_dimension", report.class_dimension},
              {"locally_identifiable", report.class_dimension == 0},
              {"stiffest_direction", json_vector(report.stiffest_direction)},
              {"sloppiest_direction", json_vector(report.sloppiest_direction)},
              {"one_sided", report.one_sided},
              {"config", cfg.source}};
  write_atomic(out_dir / "fim.json", dump(doc));
}

void cmd_multiscale(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto& block = *cfg.multiscale;
  const DeltaSloppinessCurve curve = delta_sloppiness(cfg.model, *cfg.p0, block.deltas, block.options);
  const int r = cfg.model.dim();

  json entries = json::array();
  json deltas = json::array(), sup = json::array(), inf = json::array(), ratio = json::array();
  std::string csv = "delta,sup_d,inf_d,ratio";
  for (int i = 0; i < r; ++i) csv += fmt::format(",max_dir_{}", i + 1);
  for (int i = 0; i < r; ++i) csv += fmt::format(",min_dir_{}", i + 1);
  csv += "\n";

  for (const auto& e : curve.entries) {
    if (e.empty_sphere) spdlog::warn("multiscale: sphere of radius {} does not meet P", e.delta);
    deltas.push_back(json_number(e.delta));
    sup.push_back(json_number(e.sup_d));
    inf.push_back(json_number(e.inf_d));
    ratio.push_back(json_number(e.ratio));
    json maxima = json::array(), minima = json::array();
    for (const auto& sp : e.local_maxima) maxima.push_back(sphere_point_json(sp));
    for (const auto& sp : e.local_minima) minima.push_back(sphere_point_json(sp));
    json entry = {{"delta", json_number(e.delta)},
                  {"sup_d", json_number(e.sup_d)},
                  {"inf_d", json_number(e.inf_d)},
                  {"ratio", json_number(e.ratio)},
                  {"empty_sphere", e.empty_sphere},
                  {"abandoned_starts", e.abandoned},
                  {"infinite_excluded", e.infinite_excluded},
                  {"local_maxima", maxima},
                  {"local_minima", minima}};
    entry["max_disruptive"] = e.local_maxima.empty() ? json(nullptr) : sphere_point_json(e.max_disruptive);
    entry["min_disruptive"] = e.local_minima.empty() ? json(nullptr) : sphere_point_json(e.min_disruptive);
    entries.push_back(entry);

    csv += fmt::format("{},{},{},{}", csv_number(e.delta), csv_number(e.sup_d), csv_number(e.inf_d),
                       csv_number(e.ratio));
    for (const SpherePoint* sp : {&e.max_disruptive, &e.min_disruptive}) {
      const bool have = sp == &e.max_disruptive ? !e.local_maxima.empty() : !e.local_minima.empty();
      for (int i = 0; i < r; ++i) csv += "," + (have ? csv_number(sp->direction(i)) : std::string());
    }
    csv += "\n";
  }
  json doc = {{"model", cfg.model.name},
              {"p0", json_vector(curve.p0)},
              {"deltas", deltas},
              {"sup_d", sup},
              {"inf_d", inf},
              {"ratio", ratio},
              {"starts_used", curve.starts_used},
              {"entries", entries},
              {"config", cfg.source}};
  write_atomic(out_dir / "multiscale.json", dump(doc));
  write_atomic(out_dir / "multiscale.csv", csv);
}

void cmd_levelset(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto& block = *cfg.levelset;
  const LevelSetGrid grid = level_set_grid(cfg.model, *cfg.p0, block.x, block.y, block.sqrt_mode);
  std::string csv = "i,j,p_i,p_j,value\n";
  for (int i = 0; i < grid.x.resolution; ++i) {
    for (int j = 0; j < grid.y.resolution; ++j) {
      csv += fmt::format("{},{},{},{},{}\n", i, j, csv_number(grid.x.coord(i)), csv_number(grid.y.coord(j)),
                         csv_number(grid.values(i, j)));
    }
  }
  std::string svg, contour_csv;
  if (!block.levels.empty()) {
    const auto contours = contour_polylines(grid, block.levels);
    svg = render_svg(grid, block.levels, contours);
    contour_csv = "level_index,level,polyline,vertex,closed,p_i,p_j\n";
    for (std::size_t k = 0; k < contours.size(); ++k) {
      for (std::size_t l = 0; l < contours[k].size(); ++l) {
        const Polyline& line = contours[k][l];
        for (std::size_t v = 0; v < line.vertices.size(); ++v) {
          contour_csv += fmt::format("{},{},{},{},{},{},{}\n", k, csv_number(block.levels[k]), l, v,
                                     line.closed ? 1 : 0, csv_number(line.vertices[v].x()),
                                     csv_number(line.vertices[v].y()));
        }
      }
    }
  }
  write_atomic(out_dir / "levelset.csv", csv);
  if (!svg.empty()) {
    write_atomic(out_dir / "levelset.svg", svg);
    write_atomic(out_dir / "contours.csv", contour_csv);
  }
}

void cmd_identifiability(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const FimReport report = fim(cfg.model, *cfg.p0, cfg.fim);
  json doc = {{"model", cfg.model.name},
              {"p0", json_vector(*cfg.p0)},
              {"locally_identifiable", report.class_dimension == 0},
              {"rank", report.numerical_rank},
              {"class_dimension", report.class_dimension},
              {"singular_values", json_vector(report.singular_values)},
              {"one_sided", report.one_sided}};
  std::string csv;
  if (cfg.identifiability.trace) {
    const FiberTrace trace = trace_fiber(cfg.model, *cfg.p0, cfg.identifiability.fiber);
    const Vector phi0 = evaluate(cfg.model, *cfg.p0);
    csv = "step";
    for (int i = 0; i < cfg.model.dim(); ++i) csv += fmt::format(",p{}", i + 1);
    csv += ",residual\n";
    for (std::size_t k = 0; k < trace.points.size(); ++k) {
      const Vector& p = trace.points[k];
      csv += std::to_string(k);
      for (Eigen::Index i = 0; i < p.size(); ++i) csv += "," + csv_number(p(i));
      csv += "," + csv_number((evaluate(cfg.model, p) - phi0).cwiseAbs().maxCoeff()) + "\n";
    }
    doc["fiber"] = {{"points", static_cast<int>(trace.points.size())},
                    {"arc_length", json_number(trace.arc_length)},
                    {"drift", json_number(trace.drift)},
                    {"stop", std::string(to_string(trace.stop))},
                    {"csv", "fiber.csv"}};
  }
  doc["config"] = cfg.source;
  write_atomic(out_dir / "identifiability.json", dump(doc));
  if (!csv.empty()) write_atomic(out_dir / "fiber.csv", csv);
}

void cmd_confidence(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  const auto& block = *cfg.confidence;
  const Vector start = block.start ? *block.start : *cfg.p0;
  const ConfidenceAssessment a = assess_practical_identifiability(cfg.model, block.z0, start, block.options);
  json starts = json::array();
  for (const auto& s : a.starts) {
    starts.push_back({{"start", json_vector(s.start)},
                      {"estimate", json_vector(s.estimate)},
                      {"neg_log_likelihood", json_number(s.neg_log_likelihood)},
                      {"converged", s.converged},
                      {"iterations", s.iterations}});
  }
  json escapes = json::array();
  for (const auto& d : a.escape_directions) escapes.push_back(json_vector(d));
  json doc = {{"model", cfg.model.name},
              {"z0", json_vector(a.z0)},
              {"alpha", a.alpha},
              {"epsilon", json_number(a.epsilon)},
              {"bounded", a.bounded},
              {"estimate", json_vector(a.estimate)},
              {"neg_log_likelihood", json_number(a.nll_at_estimate)},
              {"probe_radius", json_number(a.probe_radius)},
              {"n_directions", a.n_directions},
              {"escape_directions", escapes},
              {"mle", starts},
              {"config", cfg.source}};
  write_atomic(out_dir / "confidence.json", dump(doc));
}

void cmd_distance(const RunConfig& cfg, std::ostream& out) {
  const PremetricValue v = premetric(cfg.model, cfg.distance->p, *cfg.p0);
  json doc = {{"kind", std::string(to_string(v.kind))}, {"value", json_number(v.value, true)}};
  if (cfg.model.lpv && v.kind != PremetricKind::L2Continuous) {
    doc["d_infinity"] = json_number(d_infinity(cfg.model, cfg.distance->p, *cfg.p0).value, true);
  }
  out << doc.dump() << "\n";
}

void cmd_models(std::ostream& out) {
  for (const auto& e : models::catalog()) {
    out << e.name << "\n  " << e.summary << "\n  parameters: " << e.parameters << "\n  example: " << e.reference
        << "\n";
  }
}

}  // namespace sloppykit::cli
