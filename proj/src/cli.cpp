#include "contrastgeo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "contrastgeo/expr.hpp"
#include "contrastgeo/models.hpp"
#include "contrastgeo/natgrad.hpp"
#include "contrastgeo/parallel.hpp"
#include "contrastgeo/reduction.hpp"
#include "contrastgeo/report.hpp"
#include "contrastgeo/tensors.hpp"

namespace contrastgeo::cli {

namespace {

/// Bad user input that CLI11 cannot see (malformed --points, --target, ...).
class FlagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string model;
  std::string model_file;
  std::vector<std::string> params;
  std::uint64_t seed = 1;
  double tol = 1e-8;
  double rank_tol = kDefaultRankTol;
  std::string out;
  unsigned threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  auto* m = app->add_option("--model", c.model, "zoo model name");
  auto* f = app->add_option("--model-file", c.model_file, "model descriptor (JSON)");
  m->excludes(f);
  app->add_option("--params", c.params, "model parameters k=v (comma separated or repeated)");
  app->add_option("--seed", c.seed, "RNG seed");
  app->add_option("--tol", c.tol, "tolerance")->check(CLI::PositiveNumber);
  app->add_option("--rank-tol", c.rank_tol, "relative kernel threshold")->check(CLI::PositiveNumber);
  app->add_option("--out", c.out, "output path (default stdout)");
  app->add_option("--threads", c.threads, "worker threads (0 = hardware)");
}

ModelDescriptor load_model(const Common& c) {
  if (c.model.empty() && c.model_file.empty()) throw FlagError("one of --model or --model-file is required");
  Params p;
  try {
    p = parse_params(c.params);
  } catch (const std::invalid_argument& e) {
    throw FlagError(e.what());
  }
  if (!c.model_file.empty()) {
    if (!p.empty()) throw FlagError("--params cannot be combined with --model-file");
    return load_descriptor(c.model_file);
  }
  return build(c.model, p);
}

Json model_json(const ModelDescriptor& m) {
  Json params = Json::object();
  for (const auto& [k, v] : m.params) params[k] = v;
  const GroupoidBackend& b = m.contrast.backend();
  Json j;
  j["name"] = m.name;
  j["contrast"] = m.contrast_source;
  j["params"] = params;
  j["backend"] = b.name();
  j["base_dim"] = b.base_dim();
  j["rank"] = b.rank();
  j["coordinates"] = m.coordinates;
  j["quotient_chart"] = m.chart ? Json(m.chart->name) : Json(nullptr);
  return j;
}

Json meta_json(const std::string& command, const ModelDescriptor& m, const Common& c) {
  Json j;
  j["tool"] = "contrastgeo";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["model"] = model_json(m);
  j["seed"] = c.seed;
  j["rng"] = Rng::kAlgorithm;
  j["tolerance"] = c.tol;
  j["rank_tol"] = c.rank_tol;
  j["conventions"] = {
      {"frame", "constant sections: coordinate fields (pair groupoid) or algebra basis (group)"},
      {"gamma", "gamma[i][j][l] = g(nabla_{e_i} e_j, e_l) = e_i^L e_j^L e_l^R F"},
      {"pair_left", "X^L moves the second slot by +X"},
      {"pair_right", "X^R moves the first slot by -X"},
      {"alpha", "alpha = +1 gives nabla^F, alpha = -1 gives nabla^{F*}"},
      {"normalizer", "transitivity checked at sample level"}};
  return j;
}

void write_output(const Common& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw FlagError("cannot write '" + c.out + "'");
  f << text;
}

std::vector<Vec> parse_points(const std::string& arg, int dim) {
  std::string text = arg;
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw FlagError("--points is empty");
  if (arg[first] != '[') {
    std::ifstream f(arg);
    if (!f) throw FlagError("cannot open points file '" + arg + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FlagError(std::string("--points: ") + e.what());
  }
  if (!doc.is_array()) throw FlagError("--points must be a JSON array of coordinate arrays");
  std::vector<Vec> pts;
  for (const auto& row : doc) {
    if (!row.is_array() || static_cast<int>(row.size()) != dim)
      throw FlagError("--points: every point needs " + std::to_string(dim) + " coordinates");
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
      if (!row[i].is_number()) throw FlagError("--points: coordinates must be numbers");
      v[i] = row[i].get<double>();
    }
    pts.push_back(v);
  }
  if (pts.empty()) throw FlagError("--points: no points given");
  return pts;
}

std::vector<Vec> sample_points(const Domain& dom, int n, std::uint64_t seed) {
  if (n < 1) throw FlagError("--random/--samples must be >= 1");
  Rng rng(seed);
  std::vector<Vec> pts;
  for (int i = 0; i < n; ++i) pts.push_back(dom.sample(rng));
  return pts;
}

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw FlagError(std::string(flag) + ": '" + item + "' is not a number");
    v.push_back(x);
  }
  return v;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / v.size();
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeFlags {
  Common common;
  std::string points;
  int random = 0;
  std::string alpha;
};

int cmd_analyze(const AnalyzeFlags& fl, std::ostream& out) {
  const ModelDescriptor model = load_model(fl.common);
  const ContrastFunction& f = model.contrast;
  const int n = f.backend().base_dim();
  std::vector<Vec> pts;
  if (n == 0) {
    pts = {Vec(0)};
  } else if (!fl.points.empty()) {
    pts = parse_points(fl.points, n);
  } else {
    pts = sample_points(f.domain(), fl.random > 0 ? fl.random : 1, fl.common.seed);
  }
  const std::vector<double> alphas = fl.alpha.empty() ? std::vector<double>{} : parse_list(fl.alpha, "--alpha");

  const auto blocks = parallel_map<Json>(
      static_cast<int>(pts.size()),
      [&](int i) {
        const Vec& m = pts[i];
        const Tensor3 gf = christoffel_lowered(f, m);
        const Tensor3 gs = christoffel_lowered(dual_contrast(f), m);
        const Tensor3 lc = levi_civita_lowered(f, m);
        const Tensor3 t = gf - gs;
        const KernelFrame k = kernel_at(f, m, fl.common.rank_tol);
        Json b;
        b["coords"] = to_json(m);
        b["metric"] = to_json(metric(f, m));
        b["gamma_f"] = to_json(gf);
        b["gamma_fstar"] = to_json(gs);
        b["gamma_lc"] = to_json(lc);
        b["skewness"] = to_json(t);
        Json al = Json::array();
        for (double a : alphas) al.push_back({{"alpha", a}, {"gamma", to_json(lc + (0.5 * a) * t)}});
        b["alpha"] = al;
        b["kernel"] = {{"rank", k.rank},
                       {"basis", to_json(Mat(k.kernel.transpose()))},
                       {"eigenvalues", to_json(k.eigenvalues)},
                       {"indeterminate", k.indeterminate}};
        return b;
      },
      fl.common.threads);

  Json doc;
  doc["schema"] = kReportSchema;
  doc["meta"] = meta_json("analyze", model, fl.common);
  doc["points"] = blocks;
  write_output(fl.common, dump(doc), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// verify

using Suite = std::function<double(const ContrastFunction&, const Vec&, double rank_tol)>;

double symmetry_residual(const ContrastFunction& f, const Vec& m) {
  const int d = f.rank();
  const ContrastFunction fs = dual_contrast(f);
  double r = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      const Direction jk[] = {{Vec::Unit(d, j), Side::Left}, {Vec::Unit(d, k), Side::Left}};
      const Direction kj[] = {{Vec::Unit(d, k), Side::Left}, {Vec::Unit(d, j), Side::Left}};
      r = std::max({r, std::abs(lrz_derivative(f, m, jk) - lrz_derivative(f, m, kj)),
                    std::abs(lrz_derivative(f, m, jk) - lrz_derivative(fs, m, jk))});
    }
  }
  const Tensor3 t = skewness(f, m);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l)
        r = std::max({r, std::abs(t(i, j, l) - t(j, i, l)), std::abs(t(i, j, l) - t(i, l, j)),
                      std::abs(t(i, j, l) - t(l, j, i))});
  return r;
}

double agreement_residual(const ContrastFunction& f, const Vec& m) {
  const int d = f.rank();
  double r = 0.0;
  for (int j = 0; j < d; ++j) {
    for (int k = 0; k < d; ++k) {
      const Vec ej = Vec::Unit(d, j), ek = Vec::Unit(d, k);
      const Direction ll[] = {{ej, Side::Left}, {ek, Side::Left}};
      const Direction lr[] = {{ej, Side::Left}, {ek, Side::Right}};
      const Direction rr[] = {{ej, Side::Right}, {ek, Side::Right}};
      const double a = lrz_derivative(f, m, ll), b = lrz_derivative(f, m, lr), c = lrz_derivative(f, m, rr);
      r = std::max({r, std::abs(a - b), std::abs(a - c), std::abs(b - c)});
    }
  }
  return r;
}

double lc_equivalence_residual(const ContrastFunction& f, const Vec& m) {
  const Tensor3 lc = levi_civita_lowered(f, m);
  const Tensor3 mean_gamma = 0.5 * (christoffel_lowered(f, m) + christoffel_lowered(dual_contrast(f), m));
  return max_abs_diff(lc, mean_gamma);
}

const std::vector<std::pair<std::string, Suite>>& suites() {
  static const std::vector<std::pair<std::string, Suite>> s = {
      {"contrast", [](const ContrastFunction& f, const Vec& m, double) { return contrast_residual(f, m); }},
      {"symmetry", [](const ContrastFunction& f, const Vec& m, double) { return symmetry_residual(f, m); }},
      {"agreement", [](const ContrastFunction& f, const Vec& m, double) { return agreement_residual(f, m); }},
      {"duality", [](const ContrastFunction& f, const Vec& m, double) { return duality_residual(f, m); }},
      {"torsion", [](const ContrastFunction& f, const Vec& m, double) { return torsion_residual(f, m); }},
      {"koszul",
       [](const ContrastFunction& f, const Vec& m, double rt) { return koszul_residual(f, m, kernel_at(f, m, rt)); }},
      {"lie",
       [](const ContrastFunction& f, const Vec& m, double rt) {
         return lie_derivative_residual(f, m, kernel_at(f, m, rt));
       }},
      {"closure", [](const ContrastFunction& f, const Vec& m, double rt) { return kernel_closure_residual(f, m, rt); }},
      {"lc-equiv", [](const ContrastFunction& f, const Vec& m, double) { return lc_equivalence_residual(f, m); }},
  };
  return s;
}

struct VerifyFlags {
  Common common;
  std::string suite = "all";
  int samples = 20;
};

int cmd_verify(const VerifyFlags& fl, std::ostream& out) {
  std::vector<std::string> selected;
  {
    std::stringstream ss(fl.suite);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "all") {
        selected = suite_names();
        break;
      }
      if (std::find(suite_names().begin(), suite_names().end(), item) == suite_names().end())
        throw FlagError("unknown suite '" + item + "'");
      if (std::find(selected.begin(), selected.end(), item) == selected.end()) selected.push_back(item);
    }
    if (selected.empty()) throw FlagError("--suite is empty");
  }
  if (fl.samples < 1) throw FlagError("--samples must be >= 1");

  const ModelDescriptor model = load_model(fl.common);
  const ContrastFunction& f = model.contrast;
  const std::vector<Vec> pts = sample_points(f.domain(), fl.samples, fl.common.seed);
  const double tol = fl.common.tol;

  Json results = Json::array();
  bool all_passed = true;
  for (const std::string& name : selected) {
    Json s;
    s["name"] = name;
    s["tolerance"] = tol;
    s["samples"] = fl.samples;
    if (name == "rank") {
      std::vector<int> ranks = parallel_map<int>(
          fl.samples,
          [&](int i) {
            const KernelFrame k = kernel_at(f, pts[i], fl.common.rank_tol);
            return k.indeterminate ? -1 - (k.dim() - k.rank) : k.dim() - k.rank;
          },
          fl.common.threads);
      const int r0 = ranks[0] < 0 ? -1 - ranks[0] : ranks[0];
      int mismatches = 0, indeterminate = 0;
      for (int r : ranks) {
        if (r < 0) ++indeterminate;
        if ((r < 0 ? -1 - r : r) != r0) ++mismatches;
      }
      const bool passed = mismatches == 0;
      s["max"] = static_cast<double>(mismatches);
      s["mean"] = static_cast<double>(mismatches) / fl.samples;
      s["passed"] = passed;
      s["detail"] = {{"rank", r0}, {"mismatches", mismatches}, {"indeterminate", indeterminate}};
      all_passed = all_passed && passed;
      results.push_back(s);
      continue;
    }
    const Suite& fn = std::find_if(suites().begin(), suites().end(), [&](const auto& p) { return p.first == name; })->second;
    const std::vector<double> vals = parallel_map<double>(
        fl.samples, [&](int i) { return fn(f, pts[i], fl.common.rank_tol); }, fl.common.threads);
    const auto worst = std::max_element(vals.begin(), vals.end());
    const double mx = *worst;
    const bool passed = std::isfinite(mx) && mx <= tol;
    s["max"] = mx;
    s["mean"] = mean(vals);
    s["passed"] = passed;
    s["worst_point"] = to_json(pts[static_cast<std::size_t>(worst - vals.begin())]);
    all_passed = all_passed && passed;
    results.push_back(s);
  }

  Json doc;
  doc["schema"] = kReportSchema;
  doc["meta"] = meta_json("verify", model, fl.common);
  doc["suites"] = results;
  doc["passed"] = all_passed;
  write_output(fl.common, dump(doc), out);
  return all_passed ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceFlags {
  Common common;
  std::string points;
  int random = 0;
  int fiber_checks = 3;
};

int cmd_reduce(const ReduceFlags& fl, std::ostream& out) {
  if (fl.fiber_checks < 1) throw FlagError("--fiber-checks must be >= 1");
  const ModelDescriptor model = load_model(fl.common);
  if (!model.chart) throw ModelError("model '" + model.name + "' has no quotient chart");
  const QuotientChart& chart = *model.chart;
  const std::vector<Vec> pts = !fl.points.empty()
                                   ? parse_points(fl.points, chart.quotient_dim)
                                   : sample_points(chart.domain, fl.random > 0 ? fl.random : 5, fl.common.seed);
  ReduceOptions opts;
  opts.fiber_checks = fl.fiber_checks;
  opts.tol = fl.common.tol;
  opts.rank_tol = fl.common.rank_tol;

  const auto reduced = parallel_map<ReducedStructure>(
      static_cast<int>(pts.size()), [&](int i) { return reduce(model.contrast, chart, pts[i], opts); },
      fl.common.threads);

  bool ok = true;
  Json blocks = Json::array();
  std::vector<double> ratios;
  for (const ReducedStructure& r : reduced) {
    Json b;
    b["coords"] = to_json(r.point);
    b["representative"] = to_json(r.representative);
    b["metric"] = to_json(r.metric);
    b["gamma_f"] = to_json(r.gamma);
    b["gamma_fstar"] = to_json(r.gamma_star);
    b["condition"] = r.condition;
    b["residuals"] = {{"section", r.section_residual},
                      {"koszul", r.koszul_residual},
                      {"representative", r.representative_residual},
                      {"transport", r.transport_residual}};
    b["koszul"] = r.koszul;
    b["foliated"] = r.foliated;
    b["diagnostics"] = r.diagnostics;
    if (chart.reference_metric) {
      const Mat ref = chart.reference_metric(r.point);
      const double c = (r.metric.array() * ref.array()).sum() / ref.squaredNorm();
      ratios.push_back(c);
      b["reference_ratio"] = c;
      b["reference_deviation"] = (r.metric - c * ref).norm() / ref.norm();
    }
    ok = ok && r.koszul && r.foliated;
    blocks.push_back(b);
  }

  Json doc;
  doc["schema"] = kReportSchema;
  doc["meta"] = meta_json("reduce", model, fl.common);
  doc["chart"] = {{"name", chart.name}, {"quotient_dim", chart.quotient_dim}, {"fiber_checks", fl.fiber_checks}};
  doc["points"] = blocks;
  if (!ratios.empty()) {
    const double mu = mean(ratios);
    double var = 0.0;
    for (double x : ratios) var += (x - mu) * (x - mu);
    doc["proportionality"] = {{"constant", mu}, {"std_dev", std::sqrt(var / ratios.size())}};
  }
  doc["passed"] = ok;
  write_output(fl.common, dump(doc), out);
  return ok ? kOk : kReductionFailed;
}

// ---------------------------------------------------------------------------
// optimize

struct OptimizeFlags {
  Common common;
  std::vector<std::string> target;
  std::string theta0;
  double eta = 0.1;
  int steps = 200;
  double gtol = 1e-8;
  bool require_converged = false;
  std::string csv;
};

Vec parse_target(const std::vector<std::string>& items, const ModelDescriptor& m) {
  const int n = static_cast<int>(m.coordinates.size());
  std::vector<std::string> parts;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string p;
    while (std::getline(ss, p, ','))
      if (!p.empty()) parts.push_back(p);
  }
  const bool named = !parts.empty() && parts.front().find('=') != std::string::npos;
  if (!named) {
    std::string joined;
    for (const auto& p : parts) joined += (joined.empty() ? "" : ",") + p;
    const Vec v = to_vec(parse_list(joined, "--target"));
    if (v.size() != n) throw FlagError("--target needs " + std::to_string(n) + " values");
    return v;
  }
  Vec v = Vec::Constant(n, std::nan(""));
  for (const auto& p : parts) {
    const auto eq = p.find('=');
    if (eq == std::string::npos) throw FlagError("--target: mix of named and positional values");
    const std::string key = p.substr(0, eq);
    const auto it = std::find(m.coordinates.begin(), m.coordinates.end(), key);
    if (it == m.coordinates.end()) throw FlagError("--target: unknown coordinate '" + key + "'");
    v[it - m.coordinates.begin()] = parse_list(p.substr(eq + 1), "--target").at(0);
  }
  if (!v.allFinite()) throw FlagError("--target: every coordinate must be given");
  return v;
}

int cmd_optimize(const OptimizeFlags& fl, std::ostream& out) {
  if (!(fl.eta > 0.0)) throw FlagError("--eta must be positive");
  if (fl.steps < 0) throw FlagError("--steps must be >= 0");
  const ModelDescriptor model = load_model(fl.common);
  const ContrastFunction& f = model.contrast;
  const int n = f.backend().base_dim();
  if (n == 0) throw ModelError("model '" + model.name + "' has a point base; nothing to optimize");

  Rng rng(fl.common.seed);
  Vec theta0 = f.domain().sample(rng);
  Vec target = f.domain().sample(rng);
  if (!fl.theta0.empty()) {
    theta0 = to_vec(parse_list(fl.theta0, "--theta0"));
    if (theta0.size() != n) throw FlagError("--theta0 needs " + std::to_string(n) + " values");
  }
  if (!fl.target.empty()) target = parse_target(fl.target, model);

  OptimizeProblem problem = make_problem(f, target, fl.eta, fl.steps, fl.gtol);
  problem.rank_tol = fl.common.rank_tol;
  const Trajectory t = run(problem, theta0);

  Json traj = Json::array();
  for (const auto& r : t.records)
    traj.push_back({{"step", r.step},
                    {"theta", to_json(r.theta)},
                    {"objective", r.objective},
                    {"grad_norm", r.grad_norm},
                    {"condition", r.condition}});
  Json doc;
  doc["schema"] = kReportSchema;
  doc["meta"] = meta_json("optimize", model, fl.common);
  doc["problem"] = {{"objective", "F(theta, target)"},
                    {"target", to_json(target)},
                    {"theta0", to_json(theta0)},
                    {"eta", fl.eta},
                    {"max_steps", fl.steps},
                    {"gtol", fl.gtol}};
  doc["trajectory"] = traj;
  doc["converged"] = t.converged;
  doc["steps"] = t.steps;
  doc["final_theta"] = to_json(t.final_theta());
  doc["koszul_violation"] = t.koszul_violation;
  doc["diagnostics"] = t.diagnostics;
  write_output(fl.common, dump(doc), out);

  if (!fl.csv.empty()) {
    std::ofstream csv(fl.csv, std::ios::binary);
    if (!csv) throw FlagError("cannot write '" + fl.csv + "'");
    csv << "step";
    for (const auto& c : model.coordinates) csv << ',' << csv_field(c);
    csv << ",objective,grad_norm\r\n";
    for (const auto& r : t.records) {
      csv << r.step;
      for (Eigen::Index i = 0; i < r.theta.size(); ++i) csv << ',' << format_double(r.theta[i]);
      csv << ',' << format_double(r.objective) << ',' << format_double(r.grad_norm) << "\r\n";
    }
  }
  return fl.require_converged && !t.converged ? kNotConverged : kOk;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, s] : suites()) v.push_back(n);
    v.push_back("rank");
    return v;
  }();
  return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"contrastgeo: geometry induced by contrast functions on groupoids", "contrastgeo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  AnalyzeFlags an;
  auto* analyze = app.add_subcommand("analyze", "metric, connections and skewness at points");
  add_common(analyze, an.common);
  auto* ap = analyze->add_option("--points", an.points, "JSON array of points, inline or a file path");
  analyze->add_option("--random", an.random, "number of random points")->excludes(ap);
  analyze->add_option("--alpha", an.alpha, "comma list of alpha values");

  VerifyFlags vf;
  auto* verify = app.add_subcommand("verify", "residual suites over random points");
  add_common(verify, vf.common);
  verify->add_option("--suite", vf.suite, "comma list of suites or 'all'");
  verify->add_option("--samples", vf.samples, "random points per suite");

  ReduceFlags rf;
  auto* reduce_cmd = app.add_subcommand("reduce", "reduced structure on the quotient chart");
  add_common(reduce_cmd, rf.common);
  auto* rp = reduce_cmd->add_option("--points", rf.points, "quotient points, inline JSON or a file path");
  reduce_cmd->add_option("--random", rf.random, "number of random quotient points")->excludes(rp);
  reduce_cmd->add_option("--fiber-checks", rf.fiber_checks, "fiber points per representative check");

  OptimizeFlags of;
  auto* optimize = app.add_subcommand("optimize", "natural-gradient descent on F(theta, target)");
  add_common(optimize, of.common);
  optimize->add_option("--target", of.target, "target, e.g. mu=1,sigma=2 or 1,2");
  optimize->add_option("--theta0", of.theta0, "start point, comma separated");
  optimize->add_option("--eta", of.eta, "step size");
  optimize->add_option("--steps", of.steps, "maximum steps");
  optimize->add_option("--gtol", of.gtol, "gradient-norm stop tolerance");
  optimize->add_flag("--require-converged", of.require_converged, "exit 5 when not converged");
  optimize->add_option("--csv", of.csv, "also write the trajectory as CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadFlags;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(an, out);
    if (verify->parsed()) return cmd_verify(vf, out);
    if (reduce_cmd->parsed()) return cmd_reduce(rf, out);
    if (optimize->parsed()) return cmd_optimize(of, out);
  } catch (const FlagError& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  } catch (const expr::ParseError& e) {
    err << "model error: " << e.what() << "\n";
    return kModelError;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kModelError;
  } catch (const EvaluationError& e) {
    err << "model error: " << e.what() << "\n";
    return kModelError;
  } catch (const std::exception& e) {
    err << "model error: " << e.what() << "\n";
    return kModelError;
  }
  return kBadFlags;
}

}  // namespace contrastgeo::cli
