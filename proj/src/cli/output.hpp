#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sloppykit/multiscale.hpp"
#include "sloppykit/types.hpp"

namespace sloppykit::cli {

/// Finite values as numbers; infinities as "inf"/"-inf" (or "+inf" when
/// plus_sign is set); NaN as null.
nlohmann::json json_number(double v, bool plus_sign = false);
nlohmann::json json_vector(const Vector& v);
nlohmann::json json_matrix(const Matrix& m);  // row-major nested arrays

/// 17 significant digits; NaN becomes the empty field.
std::string csv_number(double v);

/// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Contours of a level-set grid on a 600x600 canvas with axis annotations.
std::string render_svg(const LevelSetGrid& grid, const std::vector<double>& levels,
                       const std::vector<std::vector<Polyline>>& contours);

}  // namespace sloppykit::cli
