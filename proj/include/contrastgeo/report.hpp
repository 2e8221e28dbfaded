#pragma once

// JSON report helpers.  Floats are written with 17 significant digits so that
// reports are byte-stable and round-trip exactly.

#include <string>

#include <json.hpp>

#include "contrastgeo/linalg.hpp"

namespace contrastgeo {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "contrastgeo-report/1";
inline constexpr const char* kToolVersion = "0.1.0";

Json to_json(const Vec& v);
Json to_json(const Mat& m);
Json to_json(const Tensor3& t);

/// Pretty-printed with two-space indent; non-finite numbers become null.
std::string dump(const Json& j);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);
std::string format_double(double v);

}  // namespace contrastgeo
