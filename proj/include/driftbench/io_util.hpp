#pragma once

#include <cstdint>
#include <string>

namespace driftbench {

// Shortest text form that round-trips a 64-bit float exactly.
std::string format_double(double x);

double parse_double(const std::string& s);

// Writes content to path via a temp file + rename so readers never observe a
// partially written file.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// FNV-1a over bytes, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace driftbench
