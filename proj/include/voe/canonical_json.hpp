#pragma once

// Canonical JSON serialization: sorted keys, no whitespace, doubles
// printed with %.9g. Hashes of canonical output are reproducible, so
// generated values must be snapped to 9 significant digits (snap9)
// before they are stored in anything that gets serialized.

#include <string>

#include <json.hpp>

namespace voe::io {

using Json = nlohmann::json;

std::string canonical_dump(const Json& j);

// Nearest double whose %.9g representation round-trips exactly.
double snap9(double x);

std::string format_double9(double x);

}  // namespace voe::io
