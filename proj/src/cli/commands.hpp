#pragma once

#include <filesystem>
#include <ostream>

#include "cli/config.hpp"

namespace sloppykit::cli {

// Each command computes everything first and writes its files last, so a
// failing run leaves no partial output behind.
void cmd_fim(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_multiscale(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_levelset(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_identifiability(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_confidence(const RunConfig& cfg, const std::filesystem::path& out_dir);
void cmd_distance(const RunConfig& cfg, std::ostream& out);
void cmd_models(std::ostream& out);

}  // namespace sloppykit::cli
