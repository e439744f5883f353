#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace lrchain::io {

using Json = nlohmann::ordered_json;

/// Deterministic text form: keys in insertion order, doubles with 17
/// significant digits, non-finite doubles as the strings "inf", "-inf", "nan".
/// Arrays of scalars stay on one line.
std::string to_text(const Json& doc, int indent = 2);

/// 17-significant-digit form used for JSON and CSV cells.
std::string format_double(double v);

/// Number, or the string form of a non-finite value.
Json number(double v);

}  // namespace lrchain::io
