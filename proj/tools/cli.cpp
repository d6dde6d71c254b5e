#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spcp/bench.hpp"
#include "spcp/error.hpp"
#include "spcp/gauge.hpp"
#include "spcp/matrix_io.hpp"
#include "spcp/pareto.hpp"
#include "spcp/solvers.hpp"
#include "spcp/trace.hpp"

namespace spcp::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Usage problems detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatagenFlags {
  std::string kind;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index rank = 0;
  double sparsity = 0.0;
  double snr_db = 45.0;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

struct SolveFlags {
  std::string formulation;
  std::string input;
  std::optional<double> lambda;
  std::optional<double> eps;
  std::optional<double> tau;
  std::optional<double> lambda_L;
  std::optional<double> lambda_S;
  std::string mask;
  std::string penalty = "ls";
  double huber_delta = 1.0;
  std::string solver;
  bool nonneg_S = false;
  int max_iters = 2000;
  double tol = 1e-8;
  std::uint64_t seed = 0x5eed;
  std::string out;
  std::string trace;
  std::string format;
};

struct BenchFlags {
  std::string config;
  std::string out;
};

struct PlotFlags {
  std::vector<std::string> traces;
  std::string out;
  std::string x_axis = "time";
  std::string title = "error vs time";
};

MatrixFormat format_or_usage(const std::string& name) {
  auto f = parse_format_name(name);
  if (!f) throw UsageError("--format must be csv or bin, got '" + name + "'");
  return *f;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_datagen(const DatagenFlags& f, std::ostream& out) {
  if (!f.seed) throw UsageError("datagen requires --seed");
  const MatrixFormat format = format_or_usage(f.format);
  SyntheticSpec spec;
  if (f.kind == "exp")
    spec.kind = SyntheticKind::exponential;
  else if (f.kind == "gauss")
    spec.kind = SyntheticKind::gaussian_sparse;
  else
    throw UsageError("--kind must be exp or gauss");
  spec.m = f.m;
  spec.n = f.n;
  spec.rank = f.rank;
  spec.sparsity = f.sparsity;
  spec.snr_db = f.snr_db;
  spec.seed = *f.seed;
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const fs::path dir(f.out);
  fs::create_directories(dir);
  const std::string ext = format_extension(format);
  std::map<std::string, Mat> files;
  Rng rng(spec.seed);
  if (spec.kind == SyntheticKind::exponential) {
    ExponentialData d = gen_exponential_test(spec, rng);
    files["Y"] = std::move(d.Y);
    files["Y0"] = std::move(d.Y0);
  } else {
    GaussianData d = gen_gaussian_test(spec, rng);
    files["Y"] = std::move(d.Y);
    files["L0"] = std::move(d.L0);
    files["S0"] = std::move(d.S0);
    files["Z0"] = std::move(d.Z0);
  }

  json manifest;
  manifest["kind"] = f.kind;
  manifest["m"] = spec.m;
  manifest["n"] = spec.n;
  manifest["rank"] = spec.rank;
  manifest["seed"] = spec.seed;
  manifest["format"] = f.format;
  if (spec.kind == SyntheticKind::gaussian_sparse) {
    manifest["sparsity"] = spec.sparsity;
    manifest["sparse_count"] = spec.sparse_count();
    manifest["snr_db"] = spec.snr_db;
  }
  json listing = json::object();
  for (const auto& [name, mat] : files) {
    const std::string file = name + ext;
    write_matrix(dir / file, mat, format);
    listing[name] = file;
  }
  manifest["files"] = listing;
  write_json(dir / "manifest.json", manifest);
  out << "wrote " << files.size() << " matrices to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

Formulation solve_formulation(const SolveFlags& f) {
  auto forbid = [&](bool present, const char* flag) {
    if (present) throw UsageError(std::string(flag) + " is not used by --formulation " + f.formulation);
  };
  auto need = [&](const std::optional<double>& v, const char* flag) {
    if (!v) throw UsageError("--formulation " + f.formulation + " requires " + flag);
    return *v;
  };
  if (f.formulation == "lag") {
    forbid(f.lambda.has_value(), "--lambda");
    forbid(f.eps.has_value(), "--eps");
    forbid(f.tau.has_value(), "--tau");
    return Lagrangian{need(f.lambda_L, "--lambda-l"), need(f.lambda_S, "--lambda-s")};
  }
  forbid(f.lambda_L.has_value(), "--lambda-l");
  forbid(f.lambda_S.has_value(), "--lambda-s");
  const double lambda = need(f.lambda, "--lambda");
  if (f.formulation == "flip-sum" || f.formulation == "flip-max") {
    forbid(f.eps.has_value(), "--eps");
    const double tau = need(f.tau, "--tau");
    if (f.formulation == "flip-sum") return FlipSum{lambda, tau};
    return FlipMax{lambda, tau};
  }
  forbid(f.tau.has_value(), "--tau");
  const double eps = need(f.eps, "--eps");
  if (f.formulation == "sum") return ConstrainedSum{lambda, eps};
  return ConstrainedMax{lambda, eps};
}

std::string solve_solver(const SolveFlags& f) {
  std::vector<std::string> allowed;
  if (f.formulation == "flip-max")
    allowed = {"qn", "spg", "fista"};
  else if (f.formulation == "flip-sum")
    allowed = {"spg", "fista"};
  else if (f.formulation == "lag")
    allowed = {"qn"};
  else
    allowed = {"pareto"};
  if (f.solver.empty()) return allowed.front();
  if (std::find(allowed.begin(), allowed.end(), f.solver) == allowed.end())
    throw UsageError("--solver " + f.solver + " does not apply to --formulation " + f.formulation);
  return f.solver;
}

int cmd_solve(const SolveFlags& f, std::ostream& out) {
  const Formulation formulation = solve_formulation(f);
  const std::string solver = solve_solver(f);
  if (f.penalty != "ls" && f.penalty != "huber") throw UsageError("--penalty must be ls or huber");
  if (!(f.huber_delta > 0.0) || !std::isfinite(f.huber_delta))
    throw UsageError("--huber-delta must be positive");
  std::optional<MatrixFormat> format;
  if (!f.format.empty()) format = format_or_usage(f.format);

  Mat Y = read_matrix(f.input, format);
  LinearOp op = LinearOp::sum(Y.rows(), Y.cols());
  if (!f.mask.empty()) op = LinearOp::restriction(read_mask(f.mask, Y.rows(), Y.cols()));
  const Penalty rho = f.penalty == "huber" ? Penalty::huber(f.huber_delta) : Penalty::least_squares();
  const Problem p(std::move(Y), op, rho, formulation, f.nonneg_S);

  SolverConfig cfg;
  cfg.max_iters = f.max_iters;
  cfg.tol = f.tol;
  cfg.seed = f.seed;
  cfg.validate();

  json summary;
  summary["formulation"] = f.formulation;
  summary["solver"] = solver;
  SolveResult res;
  bool converged = true;
  if (solver == "pareto") {
    ConstrainedResult cr = solve_constrained(p, cfg);
    summary["tau"] = cr.tau;
    summary["target"] = cr.target;
    summary["value_evaluations"] = cr.value_evaluations;
    summary["eps"] = constrained_eps(p);
    converged = cr.converged;
    res = std::move(cr.solve);
  } else {
    res = run_named_solver(solver, p, cfg);
    converged = res.converged();
  }

  const fs::path dir(f.out);
  fs::create_directories(dir);
  const MatrixFormat out_format = format.value_or(MatrixFormat::csv);
  const std::string ext = format_extension(out_format);
  write_matrix(dir / ("L" + ext), res.point.L, out_format);
  write_matrix(dir / ("S" + ext), res.point.S, out_format);
  if (!f.trace.empty()) {
    std::ofstream t(f.trace);
    if (!t) throw InvalidArgument("cannot write " + f.trace);
    write_trace_csv(t, res.trace);
  }

  summary["objective"] = res.objective;
  summary["residual"] = res.residual_norm;
  summary["iterations"] = res.iterations;
  summary["status"] = status_name(res.status);
  summary["converged"] = converged;
  summary["nuclear_norm_L"] = nuclear_norm(res.point.L);
  summary["l1_norm_S"] = res.point.S.cwiseAbs().sum();
  if (!std::holds_alternative<Lagrangian>(formulation))
    summary["gauge_value"] = gauge_value(p.gauge(), res.point);
  write_json(dir / "summary.json", summary);

  out << f.formulation << " via " << solver << ": objective " << std::setprecision(10) << res.objective
      << ", residual " << res.residual_norm << ", " << res.iterations << " iterations, "
      << status_name(res.status) << '\n';
  return converged ? kExitOk : kExitNonConvergence;
}

// ---------------------------------------------------------------------------

int cmd_bench(const BenchFlags& f, std::ostream& out, std::ostream& err) {
  const BenchConfig cfg = read_bench_config(f.config);
  const fs::path dir(f.out);
  const BenchReport report = run_benchmark(cfg, dir);

  json rows = json::array();
  bool all_ok = true;
  for (const BenchRow& r : report.rows) {
    json j;
    j["scenario"] = r.scenario;
    j["solver"] = r.solver;
    j["ok"] = r.ok;
    if (r.ok) {
      j["status"] = status_name(r.status);
      j["iterations"] = r.iterations;
      j["objective"] = r.objective;
      j["residual"] = r.residual;
      j["seconds"] = r.seconds;
      j["final_ref_error"] = r.final_ref_error ? json(*r.final_ref_error) : json(nullptr);
      j["trace"] = r.trace_path.filename().string();
      out << r.scenario << "/" << r.solver << ": " << status_name(r.status) << ", " << r.iterations
          << " iterations, " << r.seconds << " s\n";
    } else {
      j["error"] = r.error;
      err << r.scenario << "/" << r.solver << " failed: " << r.error << '\n';
    }
    all_ok = all_ok && r.ok && r.status != SolveStatus::max_iterations;
    rows.push_back(std::move(j));
  }
  write_json(dir / "summary.json", json{{"rows", rows}});
  return all_ok ? kExitOk : kExitNonConvergence;
}

// ---------------------------------------------------------------------------

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

int cmd_plot(const PlotFlags& f, std::ostream& out) {
  if (f.x_axis != "time" && f.x_axis != "iter") throw UsageError("--x must be time or iter");
  struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;  // (x, log10 error)
  };
  std::vector<Series> series;
  bool any_fallback = false;
  for (const std::string& path : f.traces) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open trace " + path);
    SolveTrace t;
    try {
      t = read_trace_csv(in);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path + ": " + e.what());
    }
    const bool has_ref = std::any_of(t.rows.begin(), t.rows.end(), [](const TraceRow& r) { return r.ref_error.has_value(); });
    any_fallback = any_fallback || !has_ref;
    Series s;
    s.label = fs::path(path).stem().string() + (has_ref ? "" : " (residual)");
    for (const TraceRow& r : t.rows) {
      const double e = has_ref ? r.ref_error.value_or(0.0) : r.residual;
      if (!(e > 0.0) || !std::isfinite(e)) continue;
      s.pts.emplace_back(f.x_axis == "time" ? r.wall_seconds : static_cast<double>(r.iter), std::log10(e));
    }
    series.push_back(std::move(s));
  }

  double x_max = 0.0;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const Series& s : series)
    for (const auto& [x, y] : s.pts) {
      x_max = std::max(x_max, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  if (!std::isfinite(y_lo)) {
    y_lo = -1.0;
    y_hi = 0.0;
  }
  y_lo = std::floor(y_lo);
  y_hi = std::max(std::ceil(y_hi), y_lo + 1.0);
  if (!(x_max > 0.0)) x_max = 1.0;

  const double W = 800, H = 500, left = 70, right = 190, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + pw * x / x_max; };
  auto sy = [&](double y) { return top + ph * (y_hi - y) / (y_hi - y_lo); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(f.title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = y_lo; d <= y_hi + 0.5; d += 1.0) {
    svg << "<line x1=\"" << left << "\" y1=\"" << fmt(sy(d)) << "\" x2=\"" << left + pw << "\" y2=\"" << fmt(sy(d))
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fmt(sy(d) + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = x_max * i / 4.0;
    svg << "<text x=\"" << fmt(sx(x)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"11\">" << fmt(x) << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">" << (f.x_axis == "time" ? "wall time (s)" : "iteration") << "</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << top + ph / 2 << ")\">" << (any_fallback ? "error / residual" : "relative error")
      << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % (sizeof(palette) / sizeof(palette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[i].pts.size(); ++k)
      svg << (k ? " " : "") << fmt(sx(series[i].pts[k].first)) << ',' << fmt(sy(series[i].pts[k].second));
    svg << "\"/>\n";
    const double ly = top + 16 + 18.0 * static_cast<double>(i);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << xml_escape(series[i].label) << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream file(f.out);
  if (!file) throw InvalidArgument("cannot write " + f.out);
  file << svg.str();
  out << "wrote " << f.out << " with " << series.size() << " curves\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stable principal component pursuit: low-rank plus sparse matrix decomposition.", "spcp"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Cap on internal parallelism (0 = library default)")
      ->check(CLI::NonNegativeNumber);

  DatagenFlags dg;
  auto* datagen = app.add_subcommand("datagen", "Generate a synthetic test matrix and its ground truth");
  datagen->add_option("--kind", dg.kind, "Generator: exp (low rank + exponential noise) or gauss "
                                         "(Gaussian low rank + sparse + white noise)")
      ->required()
      ->check(CLI::IsMember({"exp", "gauss"}));
  datagen->add_option("--m", dg.m, "Number of rows")->required()->check(CLI::PositiveNumber);
  datagen->add_option("--n", dg.n, "Number of columns")->required()->check(CLI::PositiveNumber);
  datagen->add_option("--rank", dg.rank, "Rank of the low-rank part")->required()->check(CLI::NonNegativeNumber);
  datagen->add_option("--sparsity", dg.sparsity,
                      "Sparse entries (gauss): fraction of m*n if below 1, else a count")
      ->capture_default_str();
  datagen->add_option("--snr-db", dg.snr_db, "Signal-to-noise ratio in dB (gauss)")->capture_default_str();
  datagen->add_option("--seed", dg.seed, "Random seed (required)");
  datagen->add_option("--out", dg.out, "Output directory")->required();
  datagen->add_option("--format", dg.format, "Matrix file format: csv or bin")->capture_default_str();

  SolveFlags sv;
  auto* solve = app.add_subcommand("solve", "Solve one formulation on a matrix file");
  solve->add_option("--formulation", sv.formulation, "sum, max, flip-sum, flip-max or lag")
      ->required()
      ->check(CLI::IsMember({"sum", "max", "flip-sum", "flip-max", "lag"}));
  solve->add_option("--input", sv.input, "Observed matrix Y (csv or bin, auto-detected)")->required();
  solve->add_option("--lambda", sv.lambda, "Gauge weight on the sparse part (all but lag)");
  solve->add_option("--eps", sv.eps, "Residual budget for sum and max");
  solve->add_option("--tau", sv.tau, "Gauge radius for flip-sum and flip-max");
  solve->add_option("--lambda-l", sv.lambda_L, "Nuclear-norm weight for lag");
  solve->add_option("--lambda-s", sv.lambda_S, "l1 weight for lag");
  solve->add_option("--mask", sv.mask, "Observed entries as row,col lines; restricts the operator");
  solve->add_option("--penalty", sv.penalty, "Misfit penalty: ls or huber")->capture_default_str();
  solve->add_option("--huber-delta", sv.huber_delta, "Huber threshold")->capture_default_str();
  solve->add_option("--solver", sv.solver,
                    "qn, spg or fista for flip-max; spg or fista for flip-sum; qn for lag; pareto for sum and max");
  solve->add_flag("--nonneg-s", sv.nonneg_S, "Constrain the sparse part to be non-negative");
  solve->add_option("--max-iters", sv.max_iters, "Iteration cap per solve")->capture_default_str();
  solve->add_option("--tol", sv.tol, "Relative stopping tolerance")->capture_default_str();
  solve->add_option("--seed", sv.seed, "Seed for the randomized SVD")->capture_default_str();
  solve->add_option("--out", sv.out, "Output directory for L, S and summary.json")->required();
  solve->add_option("--trace", sv.trace, "Write the iteration trace CSV here");
  solve->add_option("--format", sv.format, "Force the input and output format: csv or bin");

  BenchFlags bf;
  auto* bench = app.add_subcommand("bench", "Run benchmark scenarios and write one trace per solver");
  bench->add_option("--config", bf.config, "Scenario file of key = value lines")->required();
  bench->add_option("--out", bf.out, "Output directory for traces and summary.json")->required();

  PlotFlags pf;
  auto* plot = app.add_subcommand("plot", "Plot trace CSVs as log-scale error curves in an SVG");
  plot->add_option("traces", pf.traces, "Trace CSV files")->required();
  plot->add_option("--out", pf.out, "Output SVG file")->required();
  plot->add_option("--x", pf.x_axis, "Horizontal axis: time or iter")->capture_default_str();
  plot->add_option("--title", pf.title, "Chart title")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help("", CLI::AppFormatMode::All) : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }

  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    if (*datagen) return cmd_datagen(dg, out);
    if (*solve) return cmd_solve(sv, out);
    if (*bench) return cmd_bench(bf, out, err);
    return cmd_plot(pf, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace spcp::cli
