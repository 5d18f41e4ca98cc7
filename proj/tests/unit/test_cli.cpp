#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "cli/app.hpp"
#include "cli/config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sloppykit::cli;

namespace {

struct TempDir {
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sloppykit_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path path;
};

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run sk(const std::vector<std::string>& args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

std::string write_config(const TempDir& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir.path / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string write_config(const TempDir& dir, const std::string& name, const json& doc) {
  return write_config(dir, name, doc.dump());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

bool dir_empty(const TempDir& d, const std::string& sub) {
  const fs::path p = d.path / sub;
  return !fs::exists(p) || fs::is_empty(p);
}

const json kLine = {{"model", {{"name", "line"}, {"timepoints", {0, 1}}}}, {"p0", {1, 2}}};

json with(json base, const std::string& key, json value) {
  base[key] = std::move(value);
  return base;
}

}  // namespace

TEST_CASE("models lists the catalog without a config") {
  const Run r = sk({"models"});
  CHECK(r.code == kExitOk);
  for (const char* n : {"line", "sum_exp", "two_compartment", "coins", "nonlinear_ode_summary",
                        "gaussian_mixture_moments", "lpv"}) {
    CHECK(r.out.find(n) != std::string::npos);
  }
}

TEST_CASE("fim on the line model") {
  TempDir d;
  const auto cfg = write_config(d, "c.json", kLine);
  const Run r = sk({"fim", "--config", cfg, "--out", (d.path / "o").string()});
  REQUIRE(r.code == kExitOk);
  const json j = read_json(d.path / "o" / "fim.json");
  CHECK(j["fim"] == json::parse("[[2.0,1.0],[1.0,1.0]]"));
  CHECK(j["condition_number"].get<double>() == doctest::Approx((7 + 3 * std::sqrt(5.0)) / 2));
  CHECK(j["rank"] == 2);
  CHECK(j["locally_identifiable"] == true);
}

TEST_CASE("fim on a constant map reports an infinite condition number") {
  TempDir d;
  const json doc = {{"model", {{"name", "constant"}, {"dim", 2}, {"value", {1, 2, 3}}}}, {"p0", {0, 0}}};
  const Run r = sk({"fim", "--config", write_config(d, "c.json", doc), "--out", d.path.string()});
  REQUIRE(r.code == kExitOk);
  const json j = read_json(d.path / "fim.json");
  CHECK(j["condition_number"] == "inf");
  CHECK(j["rank"] == 0);
  CHECK(j["class_dimension"] == 2);
}

TEST_CASE("configuration errors exit 2 and write nothing") {
  TempDir d;
  const std::string out = (d.path / "o").string();
  auto expect2 = [&](const std::vector<std::string>& args) {
    const Run r = sk(args);
    CHECK(r.code == kExitConfig);
    CHECK_FALSE(r.err.empty());
    CHECK(dir_empty(d, "o"));
    return r;
  };
  expect2({"fim", "--config", write_config(d, "bad.json", std::string("{\"model\": "))});
  expect2({"fim", "--config", (d.path / "missing.json").string(), "--out", out});
  expect2({"fim", "--out", out});
  expect2({"frobnicate", "--config", write_config(d, "c.json", kLine)});
  expect2({"fim", "--config", write_config(d, "u.json", with(kLine, "colour", "red")), "--out", out});
  json bad_model = kLine;
  bad_model["model"]["timepoints"] = {1, 1};
  expect2({"fim", "--config", write_config(d, "dup.json", bad_model), "--out", out});
  json unknown_model = kLine;
  unknown_model["model"] = {{"name", "nope"}};
  expect2({"fim", "--config", write_config(d, "nm.json", unknown_model), "--out", out});

  const Run empty = expect2({"multiscale", "--config",
                             write_config(d, "e.json", with(kLine, "multiscale", {{"deltas", json::array()}, {"seed", 1}})),
                             "--out", out});
  CHECK(empty.err.find("deltas must be non-empty") != std::string::npos);
  expect2({"multiscale", "--config", write_config(d, "ns.json", with(kLine, "multiscale", {{"deltas", {1}}})),
           "--out", out});
  expect2({"confidence", "--config",
           write_config(d, "a.json", with(kLine, "confidence", {{"z0", {1, 3}}, {"alpha", 1.5}, {"seed", 1}})),
           "--out", out});
  json outside = {{"model", {{"name", "sum_exp"}, {"timepoints", {1, 2}}}}, {"p0", {-1, 1}}};
  expect2({"fim", "--config", write_config(d, "o.json", outside), "--out", out});
}

TEST_CASE("domain errors exit 3 and write nothing") {
  TempDir d;
  const std::string out = (d.path / "o").string();
  const Run r = sk({"identifiability", "--config",
                    write_config(d, "t.json", with(kLine, "identifiability", {{"trace", true}})), "--out", out});
  CHECK(r.code == kExitDomain);
  CHECK_FALSE(r.err.empty());
  CHECK(dir_empty(d, "o"));

  const json degenerate = {{"model", {{"name", "nonlinear_ode_summary"}}}, {"p0", {1, 0, 1, 1, 1}}};
  const Run r2 = sk({"fim", "--config", write_config(d, "g.json", degenerate), "--out", out});
  CHECK(r2.code == kExitDomain);
  CHECK(dir_empty(d, "o"));
}

TEST_CASE("multiscale outputs") {
  TempDir d;
  const json line = with(kLine, "multiscale", {{"deltas", {0.1, 1, 10}}, {"seed", 4}, {"starts", 4}});
  REQUIRE(sk({"multiscale", "--config", write_config(d, "l.json", line), "--out", d.path.string()}).code == 0);
  const json j = read_json(d.path / "multiscale.json");
  const double r0 = j["ratio"][0].get<double>();
  for (const auto& v : j["ratio"]) CHECK(std::abs(v.get<double>() - r0) <= 1e-9 * r0);
  const auto csv = read_csv(d.path / "multiscale.csv");
  REQUIRE(csv.size() == 4);
  CHECK(csv[0] == std::vector<std::string>{"delta", "sup_d", "inf_d", "ratio", "max_dir_1", "max_dir_2",
                                           "min_dir_1", "min_dir_2"});

  const json se = {{"model", {{"name", "sum_exp"}, {"timepoints", {1.0 / 3, 1, 3}}}},
                   {"p0", {4, 0.125}},
                   {"multiscale", {{"deltas", {1e-3, 0.5}}, {"seed", 9}}}};
  const auto cfg = write_config(d, "s.json", se);
  REQUIRE(sk({"multiscale", "--config", cfg, "--out", (d.path / "s").string()}).code == 0);
  REQUIRE(sk({"fim", "--config", cfg, "--out", (d.path / "s").string()}).code == 0);
  const double kappa = read_json(d.path / "s" / "fim.json")["condition_number"].get<double>();
  const double ratio = read_json(d.path / "s" / "multiscale.json")["ratio"][0].get<double>();
  CHECK(std::abs(ratio / kappa - 1) <= 1e-2);
}

TEST_CASE("levelset outputs") {
  TempDir d;
  const json tiny = with(kLine, "levelset", {{"x_range", {0, 2}}, {"y_range", {1, 3}}, {"resolution", 2}});
  REQUIRE(sk({"levelset", "--config", write_config(d, "t.json", tiny), "--out", d.path.string()}).code == 0);
  const auto rows = read_csv(d.path / "levelset.csv");
  CHECK(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"i", "j", "p_i", "p_j", "value"});
  CHECK_FALSE(fs::exists(d.path / "levelset.svg"));

  const json high = with(kLine, "levelset",
                         {{"x_range", {0, 2}}, {"y_range", {1, 3}}, {"resolution", 11}, {"levels", {1e6}}});
  REQUIRE(sk({"levelset", "--config", write_config(d, "h.json", high), "--out", (d.path / "h").string()}).code == 0);
  const std::string svg = slurp(d.path / "h" / "levelset.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<path") == std::string::npos);

  const json fig = {{"model", {{"name", "sum_exp"}, {"timepoints", {1.0 / 3, 1, 3}}}},
                    {"p0", {4, 0.5}},
                    {"levelset",
                     {{"x_range", {-1, 8}}, {"y_range", {0, 8}}, {"resolution", {37, 33}}, {"sqrt_mode", true},
                      {"levels", {0.05, 0.2}}}}};
  REQUIRE(sk({"levelset", "--config", write_config(d, "f.json", fig), "--out", (d.path / "f").string()}).code == 0);
  const auto grid = read_csv(d.path / "f" / "levelset.csv");
  CHECK(grid.size() == 1 + 37 * 33);
  double best = INFINITY;
  double at_p0 = NAN;
  int missing = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (grid[k][4].empty()) {
      ++missing;
      continue;
    }
    const double v = std::stod(grid[k][4]);
    best = std::min(best, v);
    if (grid[k][2] == "4" && grid[k][3] == "0.5") at_p0 = v;
  }
  CHECK(missing == 4 * 33);  // x in {-1, -0.75, -0.5, -0.25} lies outside P
  CHECK(at_p0 == best);
  CHECK(slurp(d.path / "f" / "levelset.svg").find("<path") != std::string::npos);
  CHECK(fs::exists(d.path / "f" / "contours.csv"));
}

TEST_CASE("identifiability outputs") {
  TempDir d;
  const json nl = {{"model", {{"name", "nonlinear_ode_summary"}}},
                   {"p0", {0.7, 1.3, -0.8, 2.1, 0.6}},
                   {"identifiability", {{"trace", true}, {"steps", 50}}}};
  REQUIRE(sk({"identifiability", "--config", write_config(d, "n.json", nl), "--out", d.path.string()}).code == 0);
  const json j = read_json(d.path / "identifiability.json");
  CHECK(j["class_dimension"] == 1);
  CHECK(j["locally_identifiable"] == false);
  const auto rows = read_csv(d.path / "fiber.csv");
  REQUIRE(rows.size() == 52);
  CHECK(rows[0] == std::vector<std::string>{"step", "p1", "p2", "p3", "p4", "p5", "residual"});
  const double ratio0 = 2.1 / 1.3;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(std::abs(std::stod(rows[k][4]) / std::stod(rows[k][2]) - ratio0) <= 1e-6 * ratio0);
  }

  const json diag = {{"model", {{"name", "sum_exp"}, {"timepoints", {1.0 / 3, 1, 3}}}}, {"p0", {2, 2}}};
  REQUIRE(sk({"identifiability", "--config", write_config(d, "g.json", diag), "--out", (d.path / "g").string()})
              .code == 0);
  CHECK(read_json(d.path / "g" / "identifiability.json")["class_dimension"] == 1);
}

TEST_CASE("confidence outputs") {
  TempDir d;
  const json line = with(kLine, "confidence", {{"z0", {1, 3}}, {"alpha", 0.05}, {"seed", 1}, {"starts", 1}});
  REQUIRE(sk({"confidence", "--config", write_config(d, "l.json", line), "--out", d.path.string()}).code == 0);
  const json j = read_json(d.path / "confidence.json");
  CHECK(j["bounded"] == true);
  REQUIRE(j["mle"].size() == 1);
  CHECK(j["estimate"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(j["estimate"][1].get<double>() == doctest::Approx(2.0).epsilon(1e-9));

  const json conformal = {{"model", {{"name", "conformal"}}},
                          {"p0", {1, 0.5}},
                          {"confidence", {{"z0", {0.1, 0.05}}, {"alpha", 0.05}, {"seed", 3}}}};
  REQUIRE(sk({"confidence", "--config", write_config(d, "c.json", conformal), "--out", (d.path / "c").string()})
              .code == 0);
  const json c = read_json(d.path / "c" / "confidence.json");
  CHECK(c["bounded"] == false);
  CHECK(c["escape_directions"].size() >= 1);
}

TEST_CASE("distance prints one JSON object") {
  TempDir d;
  const json se = {{"model", {{"name", "sum_exp"}, {"timepoints", {1.0 / 3, 1, 3}}}},
                   {"p0", {2, 1}},
                   {"distance", {{"p", {1, 2}}}}};
  Run r = sk({"distance", "--config", write_config(d, "s.json", se)});
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["kind"] == "gaussian_kl");
  CHECK(j["value"].get<double>() == 0.0);

  const json same = with(kLine, "distance", {{"p", {1, 2}}});
  r = sk({"distance", "--config", write_config(d, "l.json", same)});
  CHECK(json::parse(r.out)["value"].get<double>() == 0.0);

  const json coins = {{"model", {{"name", "coins"}}}, {"p0", {1, 1, 0.5}}, {"distance", {{"p", {1, 0.5, 0.5}}}}};
  r = sk({"distance", "--config", write_config(d, "c.json", coins)});
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["kind"] == "categorical_kl");
  CHECK(j["value"] == "+inf");

  const json lpv = {{"model",
                     {{"name", "lpv"},
                      {"A0", {{-1.0}}},
                      {"A_terms", {{{-1.0}}}},
                      {"C", {{1.0}}}}},
                    {"p0", {1, 0.3}},
                    {"distance", {{"p", {1, 2}}}}};
  r = sk({"distance", "--config", write_config(d, "lpv.json", lpv)});
  REQUIRE(r.code == 0);
  j = json::parse(r.out);
  CHECK(j["kind"] == "l2_continuous");
  CHECK(j["value"].get<double>() == doctest::Approx(1.7 * 1.7 / 4).epsilon(1e-12));
}

TEST_CASE("outputs are deterministic and round-trip") {
  TempDir d;
  const std::string cfg = std::string(SLOPPYKIT_CONFIG_DIR) + "/sum_exp_times_ninth_third.json";
  for (const char* cmd : {"fim", "multiscale", "levelset", "identifiability"}) {
    REQUIRE(sk({cmd, "--config", cfg, "--out", (d.path / "a").string()}).code == 0);
    REQUIRE(sk({cmd, "--config", cfg, "--out", (d.path / "b").string()}).code == 0);
  }
  for (const auto& entry : fs::directory_iterator(d.path / "a")) {
    CAPTURE(entry.path().filename().string());
    CHECK(slurp(entry.path()) == slurp(d.path / "b" / entry.path().filename()));
    if (entry.path().extension() == ".json") {
      const json j = read_json(entry.path());
      REQUIRE(j.contains("config"));
      CHECK_NOTHROW(parse_config(j["config"], Command::Multiscale));
      CHECK_NOTHROW(parse_config(j["config"], Command::Levelset));
    }
  }
}

TEST_CASE("shipped configs load") {
  for (const auto& entry : fs::directory_iterator(SLOPPYKIT_CONFIG_DIR)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path().string(), Command::Fim));
  }
}
