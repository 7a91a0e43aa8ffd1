#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ptelab {

// 17 significant digits, locale-independent, round-trip safe.
std::string fmt_double(double v);
std::string fmt_int(std::int64_t v);

// Minimal JSON emission helpers. Output numbers go through fmt_double so the
// CSV and JSON files carry identical digit strings.
std::string json_string(const std::string& s);

}  // namespace ptelab
