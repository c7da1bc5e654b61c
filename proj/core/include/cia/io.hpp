#pragma once

#include "cia/grids.hpp"
#include "cia/multibang.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace cia {

/// Shortest round-trip decimal form, independent of the locale.
std::string format_double(double x);

/// CSV with columns cell_start, cell_end, <prefix>_1 … <prefix>_m.
std::string control_to_csv(const PiecewiseConstantControl& v, std::string_view prefix = "value");
std::string control_to_csv(const RelaxedControl& alpha);
std::string control_to_csv(const BinaryControl& omega);

/// Parses a control CSV (header row required). Cells must be contiguous.
PiecewiseConstantControl control_from_csv(std::string_view text);
/// Only the cell_start / cell_end columns are read.
RoundingGrid grid_from_csv(std::string_view text);

/// {"bangs": [[...], ...], "weights": [...]}; scalar bangs may also be given
/// as plain numbers.
RegularizerSpec spec_from_json(std::string_view text);
std::string spec_to_json(const RegularizerSpec& spec);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace cia
