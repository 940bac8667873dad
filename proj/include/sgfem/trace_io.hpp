#pragma once

#include <iosfwd>
#include <string>

#include "sgfem/driver.hpp"

namespace sgfem::io {

/// 17 significant digits, shortest exponent form.
std::string format_double(double v);

const std::string& csv_header();
void write_csv(std::ostream& os, const driver::AdaptiveTrace& trace);

/// Configuration, summary and every iteration record as one JSON document.
void write_json(std::ostream& os, const driver::AdaptiveTrace& trace, const std::string& mesh_source);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace sgfem::io
