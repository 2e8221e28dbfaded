#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace contrastgeo::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kVerifyFailed = 1;
inline constexpr int kBadFlags = 2;
inline constexpr int kModelError = 3;
inline constexpr int kReductionFailed = 4;
inline constexpr int kNotConverged = 5;

/// Runs one command; args excludes the program name, e.g.
/// {"verify", "--model", "quad_euclid", "--suite", "all"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Suite names accepted by verify, in report order.
const std::vector<std::string>& suite_names();

}  // namespace contrastgeo::cli
