#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "sloppykit/error.hpp"
#include "sloppykit/models.hpp"

namespace sloppykit::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void require_object(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(where, "unknown key \"" + key + "\"");
  }
}

double get_double(const json& j, const std::string& where, bool allow_infinite = false) {
  if (j.is_number()) return j.get<double>();
  if (allow_infinite && j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  fail(where, allow_infinite ? "expected a number or \"inf\"/\"-inf\"" : "expected a number");
}

long long get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    fail(where, "expected a non-negative integer seed");
  }
  return j.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::vector<double> get_list(const json& j, const std::string& where, bool allow_infinite = false) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(get_double(j[k], where + "[" + std::to_string(k) + "]", allow_infinite));
  }
  return out;
}

Vector get_vector(const json& j, const std::string& where, bool allow_infinite = false) {
  const auto v = get_list(j, where, allow_infinite);
  if (v.empty()) fail(where, "must be non-empty");
  for (double x : v) {
    if (!allow_infinite && !std::isfinite(x)) fail(where, "entries must be finite");
  }
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix get_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(where, "rows must be non-empty arrays");
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = get_list(j[i], where + "[" + std::to_string(i) + "]");
    if (row.size() != cols) fail(where, "rows have different lengths");
    for (std::size_t k = 0; k < cols; ++k) m(i, k) = row[k];
  }
  if (!m.allFinite()) fail(where, "entries must be finite");
  return m;
}

struct NoiseChoice {
  bool categorical = false;
  models::GaussianSpec gaussian;
  int replicates = 1;
};

NoiseChoice parse_noise(const json& doc) {
  NoiseChoice out;
  if (!doc.contains("noise")) return out;
  const json& n = doc["noise"];
  require_object(n, "noise", {"gaussian", "categorical"});
  if (n.size() != 1) fail("noise", "give exactly one of \"gaussian\" or \"categorical\"");
  auto replicates = [](const json& block, const std::string& where) {
    if (!block.contains("replicates")) return 1;
    const long long k = get_int(block["replicates"], where + ".replicates");
    if (k < 1 || k > 1'000'000'000) fail(where + ".replicates", "must be a positive integer");
    return static_cast<int>(k);
  };
  if (n.contains("gaussian")) {
    const json& g = n["gaussian"];
    require_object(g, "noise.gaussian", {"sigma", "replicates"});
    out.replicates = replicates(g, "noise.gaussian");
    out.gaussian.replicates = out.replicates;
    if (g.contains("sigma")) {
      if (g["sigma"].is_string()) {
        if (g["sigma"].get<std::string>() != "identity") fail("noise.gaussian.sigma", "expected \"identity\" or a matrix");
      } else {
        out.gaussian.covariance = get_matrix(g["sigma"], "noise.gaussian.sigma");
      }
    }
  } else {
    const json& c = n["categorical"];
    require_object(c, "noise.categorical", {"replicates"});
    out.categorical = true;
    out.replicates = replicates(c, "noise.categorical");
  }
  return out;
}

ModelInstance build_model(const json& doc) {
  if (!doc.contains("model")) fail("config", "missing \"model\"");
  const json& m = doc["model"];
  if (!m.is_object() || !m.contains("name") || !m["name"].is_string()) fail("model", "needs a string \"name\"");
  const std::string name = m["name"].get<std::string>();
  NoiseChoice noise = parse_noise(doc);
  const bool noise_given = doc.contains("noise");

  auto gaussian_only = [&]() {
    if (noise.categorical) fail("noise", "model \"" + name + "\" needs Gaussian noise");
  };
  auto timepoints = [&](bool required) -> std::optional<std::vector<double>> {
    if (!m.contains("timepoints")) {
      if (required) fail("model", "\"" + name + "\" needs \"timepoints\"");
      return std::nullopt;
    }
    return get_list(m["timepoints"], "model.timepoints");
  };

  if (name == "line" || name == "sum_exp") {
    require_object(m, "model", {"name", "timepoints"});
    gaussian_only();
    return name == "line" ? models::make_line(*timepoints(true), noise.gaussian)
                          : models::make_sum_exp(*timepoints(true), noise.gaussian);
  }
  if (name == "two_compartment") {
    require_object(m, "model", {"name", "timepoints", "c1"});
    gaussian_only();
    const double c1 = m.contains("c1") ? get_double(m["c1"], "model.c1") : 1.0;
    return models::make_two_compartment(*timepoints(true), c1, noise.gaussian);
  }
  if (name == "coins") {
    require_object(m, "model", {"name"});
    if (noise_given && !noise.categorical) fail("noise", "model \"coins\" needs categorical noise");
    return models::make_coins(noise.replicates);
  }
  if (name == "nonlinear_ode_summary" || name == "gaussian_mixture_moments" || name == "conformal" ||
      name == "circle") {
    require_object(m, "model", {"name"});
    gaussian_only();
    if (name == "nonlinear_ode_summary") return models::make_nonlinear_ode_summary(noise.gaussian);
    if (name == "gaussian_mixture_moments") return models::make_gaussian_mixture_moments(noise.gaussian);
    if (name == "conformal") return models::make_conformal(noise.gaussian);
    return models::make_circle(noise.gaussian);
  }
  if (name == "lpv") {
    require_object(m, "model", {"name", "A0", "A_terms", "C", "timepoints"});
    gaussian_only();
    if (!m.contains("A0") || !m.contains("C")) fail("model", "\"lpv\" needs \"A0\" and \"C\"");
    const Matrix a0 = get_matrix(m["A0"], "model.A0");
    std::vector<Matrix> terms;
    if (m.contains("A_terms")) {
      if (!m["A_terms"].is_array()) fail("model.A_terms", "expected an array of matrices");
      for (std::size_t k = 0; k < m["A_terms"].size(); ++k) {
        terms.push_back(get_matrix(m["A_terms"][k], "model.A_terms[" + std::to_string(k) + "]"));
      }
    }
    const Matrix c = get_matrix(m["C"], "model.C");
    if (a0.rows() != a0.cols() || c.cols() != a0.rows()) fail("model", "A0 must be square and C must have A0's size as columns");
    const int param_dim = static_cast<int>(terms.size());
    return models::make_lpv(models::affine_system_matrix(a0, terms), c, param_dim, noise.gaussian,
                            timepoints(false));
  }
  if (name == "linear") {
    require_object(m, "model", {"name", "matrix"});
    gaussian_only();
    if (!m.contains("matrix")) fail("model", "\"linear\" needs \"matrix\"");
    return models::make_linear(get_matrix(m["matrix"], "model.matrix"), noise.gaussian);
  }
  if (name == "constant") {
    require_object(m, "model", {"name", "dim", "value"});
    gaussian_only();
    if (!m.contains("dim") || !m.contains("value")) fail("model", "\"constant\" needs \"dim\" and \"value\"");
    const long long dim = get_int(m["dim"], "model.dim");
    if (dim < 1 || dim > 64) fail("model.dim", "must lie in [1, 64]");
    return models::make_constant(static_cast<int>(dim), get_vector(m["value"], "model.value"), noise.gaussian);
  }
  fail("model.name", "unknown model \"" + name + "\" (see `sloppykit models`)");
}

ReferenceMetric parse_metric(const json& doc, int dim) {
  if (!doc.contains("metric")) return ReferenceMetric::euclidean();
  const json& j = doc["metric"];
  if (j.is_string()) {
    if (j.get<std::string>() != "euclidean") fail("metric", "expected \"euclidean\" or {\"weighted\": [...]}");
    return ReferenceMetric::euclidean();
  }
  require_object(j, "metric", {"weighted"});
  if (!j.contains("weighted")) fail("metric", "expected \"euclidean\" or {\"weighted\": [...]}");
  const Vector w = get_vector(j["weighted"], "metric.weighted");
  if (w.size() != dim) fail("metric.weighted", "needs " + std::to_string(dim) + " weights");
  if ((w.array() <= 0.0).any()) fail("metric.weighted", "weights must be positive");
  return ReferenceMetric::weighted(w);
}

Vector parameter(const json& j, const std::string& where, const ModelInstance& model) {
  const Vector p = get_vector(j, where);
  if (p.size() != model.dim()) fail(where, "needs " + std::to_string(model.dim()) + " entries");
  if (!model.space.contains(p)) fail(where, "lies outside the parameter space");
  return p;
}

JacobianScheme parse_scheme(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected \"analytic\", \"central_fd\" or \"auto\"");
  const auto s = j.get<std::string>();
  if (s == "analytic") return JacobianScheme::Analytic;
  if (s == "central_fd") return JacobianScheme::CentralFd;
  if (s == "auto") return JacobianScheme::Auto;
  fail(where, "expected \"analytic\", \"central_fd\" or \"auto\"");
}

FimOptions parse_fim(const json& doc) {
  FimOptions out;
  if (!doc.contains("fim")) return out;
  const json& j = doc["fim"];
  require_object(j, "fim", {"scheme", "step", "rank_threshold"});
  if (j.contains("scheme")) out.scheme = parse_scheme(j["scheme"], "fim.scheme");
  if (j.contains("step")) {
    out.step = get_double(j["step"], "fim.step");
    if (!(out.step > 0.0 && out.step < 1.0)) fail("fim.step", "must lie in (0, 1)");
  }
  if (j.contains("rank_threshold")) {
    out.rank_threshold = get_double(j["rank_threshold"], "fim.rank_threshold");
    if (!(out.rank_threshold > 0.0 && out.rank_threshold < 1.0)) fail("fim.rank_threshold", "must lie in (0, 1)");
  }
  return out;
}

MultiscaleBlock parse_multiscale(const json& j) {
  require_object(j, "multiscale", {"deltas", "starts", "seed", "max_iter"});
  MultiscaleBlock out;
  if (!j.contains("deltas")) fail("multiscale", "missing \"deltas\"");
  out.deltas = get_list(j["deltas"], "multiscale.deltas");
  if (out.deltas.empty()) fail("multiscale", "deltas must be non-empty");
  for (std::size_t k = 0; k < out.deltas.size(); ++k) {
    if (!(out.deltas[k] > 0.0) || !std::isfinite(out.deltas[k])) fail("multiscale.deltas", "must be positive");
    if (k > 0 && !(out.deltas[k] > out.deltas[k - 1])) fail("multiscale.deltas", "must be strictly increasing");
  }
  if (!j.contains("seed")) fail("multiscale", "missing \"seed\" (random starts need one)");
  out.options.seed = get_seed(j["seed"], "multiscale.seed");
  if (j.contains("starts")) {
    const long long s = get_int(j["starts"], "multiscale.starts");
    if (s < 0 || s > 100000) fail("multiscale.starts", "must lie in [0, 100000]");
    out.options.starts = static_cast<int>(s);
  }
  if (j.contains("max_iter")) {
    const long long s = get_int(j["max_iter"], "multiscale.max_iter");
    if (s < 1 || s > 1000000) fail("multiscale.max_iter", "must be positive");
    out.options.max_iter = static_cast<int>(s);
  }
  return out;
}

LevelsetBlock parse_levelset(const json& j, int dim) {
  require_object(j, "levelset", {"axes", "x_range", "y_range", "resolution", "sqrt_mode", "levels"});
  LevelsetBlock out;
  out.x.index = 0;
  out.y.index = 1;
  if (j.contains("axes")) {
    if (!j["axes"].is_array() || j["axes"].size() != 2) fail("levelset.axes", "expected two indices");
    out.x.index = static_cast<int>(get_int(j["axes"][0], "levelset.axes[0]"));
    out.y.index = static_cast<int>(get_int(j["axes"][1], "levelset.axes[1]"));
  }
  for (const GridAxis* a : {&out.x, &out.y}) {
    if (a->index < 0 || a->index >= dim) fail("levelset.axes", "index out of range");
  }
  if (out.x.index == out.y.index) fail("levelset.axes", "indices must differ");
  auto range = [&](const char* key, GridAxis& axis) {
    if (!j.contains(key)) fail("levelset", std::string("missing \"") + key + "\"");
    const auto r = get_list(j[key], std::string("levelset.") + key);
    if (r.size() != 2 || !std::isfinite(r[0]) || !std::isfinite(r[1]) || !(r[0] < r[1])) {
      fail(std::string("levelset.") + key, "expected [lo, hi] with lo < hi");
    }
    axis.lo = r[0];
    axis.hi = r[1];
  };
  range("x_range", out.x);
  range("y_range", out.y);
  if (!j.contains("resolution")) fail("levelset", "missing \"resolution\"");
  const json& res = j["resolution"];
  long long nx, ny;
  if (res.is_array()) {
    if (res.size() != 2) fail("levelset.resolution", "expected n or [nx, ny]");
    nx = get_int(res[0], "levelset.resolution[0]");
    ny = get_int(res[1], "levelset.resolution[1]");
  } else {
    nx = ny = get_int(res, "levelset.resolution");
  }
  if (nx < 2 || ny < 2 || nx > 10000 || ny > 10000) fail("levelset.resolution", "must lie in [2, 10000]");
  out.x.resolution = static_cast<int>(nx);
  out.y.resolution = static_cast<int>(ny);
  if (j.contains("sqrt_mode")) out.sqrt_mode = get_bool(j["sqrt_mode"], "levelset.sqrt_mode");
  if (j.contains("levels")) {
    out.levels = get_list(j["levels"], "levelset.levels");
    for (double v : out.levels) {
      if (!std::isfinite(v)) fail("levelset.levels", "levels must be finite");
    }
  }
  return out;
}

IdentifiabilityBlock parse_identifiability(const json& doc) {
  IdentifiabilityBlock out;
  if (!doc.contains("identifiability")) return out;
  const json& j = doc["identifiability"];
  require_object(j, "identifiability", {"trace", "steps", "step_size", "tolerance"});
  if (j.contains("trace")) out.trace = get_bool(j["trace"], "identifiability.trace");
  if (j.contains("steps")) {
    const long long s = get_int(j["steps"], "identifiability.steps");
    if (s < 1 || s > 1000000) fail("identifiability.steps", "must be positive");
    out.fiber.steps = static_cast<int>(s);
  }
  if (j.contains("step_size")) {
    out.fiber.step_size = get_double(j["step_size"], "identifiability.step_size");
    if (!(out.fiber.step_size > 0.0) || !std::isfinite(out.fiber.step_size)) {
      fail("identifiability.step_size", "must be positive");
    }
  }
  if (j.contains("tolerance")) {
    out.fiber.tolerance = get_double(j["tolerance"], "identifiability.tolerance");
    if (!(out.fiber.tolerance > 0.0)) fail("identifiability.tolerance", "must be positive");
  }
  return out;
}

ConfidenceBlock parse_confidence(const json& j, const ModelInstance& model) {
  require_object(j, "confidence", {"z0", "alpha", "starts", "seed", "start", "box", "r_max", "n_directions"});
  ConfidenceBlock out;
  if (!j.contains("z0")) fail("confidence", "missing \"z0\"");
  out.z0 = get_vector(j["z0"], "confidence.z0");
  if (out.z0.size() != model.prediction.output_dim) {
    fail("confidence.z0", "needs " + std::to_string(model.prediction.output_dim) + " entries");
  }
  if (!j.contains("alpha")) fail("confidence", "missing \"alpha\"");
  out.options.alpha = get_double(j["alpha"], "confidence.alpha");
  if (!(out.options.alpha > 0.0 && out.options.alpha < 1.0)) fail("confidence.alpha", "must lie in (0, 1)");
  if (!j.contains("seed")) fail("confidence", "missing \"seed\" (multi-start MLE needs one)");
  out.options.seed = get_seed(j["seed"], "confidence.seed");
  if (j.contains("starts")) {
    const long long s = get_int(j["starts"], "confidence.starts");
    if (s < 1 || s > 100000) fail("confidence.starts", "must lie in [1, 100000]");
    out.options.starts = static_cast<int>(s);
  }
  if (j.contains("start")) out.start = parameter(j["start"], "confidence.start", model);
  if (j.contains("box")) {
    require_object(j["box"], "confidence.box", {"lower", "upper"});
    if (!j["box"].contains("lower") || !j["box"].contains("upper")) fail("confidence.box", "needs lower and upper");
    const Vector lo = get_vector(j["box"]["lower"], "confidence.box.lower");
    const Vector hi = get_vector(j["box"]["upper"], "confidence.box.upper");
    if (lo.size() != model.dim() || hi.size() != model.dim() || !(lo.array() < hi.array()).all()) {
      fail("confidence.box", "needs lower < upper with one entry per parameter");
    }
    out.options.start_box = ParameterSpace::box(lo, hi);
  }
  if (j.contains("r_max")) {
    const double r = get_double(j["r_max"], "confidence.r_max");
    if (!(r > 0.0) || !std::isfinite(r)) fail("confidence.r_max", "must be positive");
    out.options.probe.r_max = r;
  }
  if (j.contains("n_directions")) {
    const long long n = get_int(j["n_directions"], "confidence.n_directions");
    if (n < 1 || n > 1000000) fail("confidence.n_directions", "must be positive");
    out.options.probe.n_directions = static_cast<int>(n);
  }
  return out;
}

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "fim") return Command::Fim;
  if (name == "multiscale") return Command::Multiscale;
  if (name == "levelset") return Command::Levelset;
  if (name == "identifiability") return Command::Identifiability;
  if (name == "confidence") return Command::Confidence;
  if (name == "distance") return Command::Distance;
  if (name == "models") return Command::Models;
  return std::nullopt;
}

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::Fim: return "fim";
    case Command::Multiscale: return "multiscale";
    case Command::Levelset: return "levelset";
    case Command::Identifiability: return "identifiability";
    case Command::Confidence: return "confidence";
    case Command::Distance: return "distance";
    case Command::Models: return "models";
  }
  return "unknown";
}

RunConfig parse_config(const json& doc, Command command) {
  require_object(doc, "config",
                 {"model", "noise", "metric", "p0", "fim", "multiscale", "levelset", "identifiability", "confidence",
                  "distance"});
  RunConfig cfg;
  cfg.source = doc;
  try {
    cfg.model = build_model(doc);
  } catch (const Error& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  cfg.model.metric = parse_metric(doc, cfg.model.dim());
  const ValidationReport report = validate(cfg.model);
  if (!report.ok()) fail("model", report.violations.front());

  if (doc.contains("p0")) cfg.p0 = parameter(doc["p0"], "p0", cfg.model);
  cfg.fim = parse_fim(doc);
  if (doc.contains("multiscale")) cfg.multiscale = parse_multiscale(doc["multiscale"]);
  if (doc.contains("levelset")) cfg.levelset = parse_levelset(doc["levelset"], cfg.model.dim());
  cfg.identifiability = parse_identifiability(doc);
  cfg.identifiability.fiber.jacobian = cfg.fim;
  if (doc.contains("confidence")) cfg.confidence = parse_confidence(doc["confidence"], cfg.model);
  if (doc.contains("distance")) {
    require_object(doc["distance"], "distance", {"p"});
    if (!doc["distance"].contains("p")) fail("distance", "missing \"p\"");
    cfg.distance = DistanceBlock{parameter(doc["distance"]["p"], "distance.p", cfg.model)};
  }

  auto need = [&](bool present, const std::string& what) {
    if (!present) fail("config", "command \"" + std::string(to_string(command)) + "\" needs " + what);
  };
  switch (command) {
    case Command::Fim:
    case Command::Identifiability:
      need(cfg.p0.has_value(), "\"p0\"");
      break;
    case Command::Multiscale:
      need(cfg.p0.has_value(), "\"p0\"");
      need(cfg.multiscale.has_value(), "a \"multiscale\" block");
      break;
    case Command::Levelset:
      need(cfg.p0.has_value(), "\"p0\"");
      need(cfg.levelset.has_value(), "a \"levelset\" block");
      break;
    case Command::Confidence:
      need(cfg.confidence.has_value(), "a \"confidence\" block");
      need(cfg.confidence->start.has_value() || cfg.p0.has_value(), "\"p0\" or \"confidence.start\"");
      break;
    case Command::Distance:
      need(cfg.p0.has_value(), "\"p0\"");
      need(cfg.distance.has_value(), "a \"distance\" block");
      break;
    case Command::Models:
      break;
  }
  return cfg;
}

RunConfig load_config(const std::string& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": malformed JSON: " + e.what());
  }
  return parse_config(doc, command);
}

}  // namespace sloppykit::cli
