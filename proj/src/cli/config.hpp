#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sloppykit/fim.hpp"
#include "sloppykit/identifiability.hpp"
#include "sloppykit/model.hpp"
#include "sloppykit/multiscale.hpp"

namespace sloppykit::cli {

enum class Command { Fim, Multiscale, Levelset, Identifiability, Confidence, Distance, Models };

std::optional<Command> parse_command(const std::string& name);
std::string_view to_string(Command command) noexcept;

/// Malformed or invalid configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MultiscaleBlock {
  std::vector<double> deltas;
  DeltaOptions options;
};

struct LevelsetBlock {
  GridAxis x;
  GridAxis y;
  bool sqrt_mode = false;
  std::vector<double> levels;
};

struct IdentifiabilityBlock {
  bool trace = false;
  FiberOptions fiber;
};

struct ConfidenceBlock {
  Vector z0;
  std::optional<Vector> start;
  ConfidenceOptions options;
};

struct DistanceBlock {
  Vector p;
};

struct RunConfig {
  nlohmann::json source;  // the document as read
  ModelInstance model;
  std::optional<Vector> p0;
  FimOptions fim;
  std::optional<MultiscaleBlock> multiscale;
  std::optional<LevelsetBlock> levelset;
  IdentifiabilityBlock identifiability;
  std::optional<ConfidenceBlock> confidence;
  std::optional<DistanceBlock> distance;
};

/// Builds the model and the command blocks, rejecting unknown keys and
/// values that violate the preconditions of `command`.
RunConfig parse_config(const nlohmann::json& doc, Command command);

/// Reads and parses a config file; all failures become ConfigError.
RunConfig load_config(const std::string& path, Command command);

}  // namespace sloppykit::cli
