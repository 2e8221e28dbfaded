#pragma once

// Model zoo and descriptor files.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "contrastgeo/groupoid.hpp"
#include "contrastgeo/linalg.hpp"
#include "contrastgeo/reduction.hpp"

namespace contrastgeo {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Params = std::map<std::string, std::string>;

struct ModelDescriptor {
  std::string name;
  Params params;                 // as given, after defaults
  std::string contrast_source;   // expression text or "builtin:<id>"
  ContrastFunction contrast;
  std::vector<std::string> coordinates;  // names of base coordinates (empty for groups)
  std::optional<QuotientChart> chart;

  // Closed-form references; empty when not available.
  std::function<Mat(const Vec&)> reference_metric;
  std::function<Tensor3(const Vec&)> reference_gamma;
  std::function<Tensor3(const Vec&)> reference_gamma_star;
};

/// Names accepted by build().
const std::vector<std::string>& zoo_names();

/// quad_euclid(n), singular_r3, gaussian_kl(chart), bregman(psi, d),
/// fubini_study(n, gauge), weighted_singular, unitary_group(k, group).
ModelDescriptor build(const std::string& name, const Params& params = {});

/// Descriptor document (JSON): {"name", "dim", "contrast", "params",
/// "quotient_chart", "domain": {"lo": [...], "hi": [...]}}.  "contrast" is an
/// expression in x1..xn, y1..yn or "builtin:<zoo name>".
ModelDescriptor parse_descriptor(const std::string& text);
ModelDescriptor load_descriptor(const std::string& path);

struct ReferenceReport {
  bool passed = true;
  int samples = 0;
  double tolerance = 0.0;
  double metric_deviation = 0.0;
  double gamma_deviation = 0.0;
  double gamma_star_deviation = 0.0;
  bool has_metric = false;
  bool has_gamma = false;
};

ReferenceReport reference_check(const ModelDescriptor& model, int samples, double tol, Rng& rng);

/// Parses "a=1,b=2" (also accepts separate "a=1" items).
Params parse_params(const std::vector<std::string>& items);

double param_double(const Params& p, const std::string& key, double fallback);
int param_int(const Params& p, const std::string& key, int fallback);

}  // namespace contrastgeo
