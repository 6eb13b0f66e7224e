#pragma once

#include <string>
#include <string_view>

#include "uglad/dataset.hpp"

namespace uglad {

/// Parses a header row of feature names followed by one sample per row.
/// Empty cells and "NaN" (any case) mark missing entries. `source` names the
/// input in error messages.
Dataset parse_csv(std::string_view text, const std::string& source = "<input>");
Dataset read_csv(const std::string& path);

/// Missing entries are written as empty cells; numbers round-trip exactly.
std::string format_csv(const Dataset& x);
void write_csv(const std::string& path, const Dataset& x);

/// Whole-file helpers shared by the command layer.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace uglad
