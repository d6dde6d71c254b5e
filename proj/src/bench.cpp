#include "spcp/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "spcp/error.hpp"
#include "spcp/matrix_io.hpp"

namespace spcp {

// ---------------------------------------------------------------------------
// Generators

void SyntheticSpec::validate() const {
  if (m <= 0 || n <= 0) throw InvalidArgument("SyntheticSpec: m and n must be positive");
  if (rank < 0 || rank > std::min(m, n))
    throw InvalidArgument("SyntheticSpec: rank must lie in [0, min(m, n)]");
  if (kind == SyntheticKind::exponential && rank == 0)
    throw InvalidArgument("SyntheticSpec: the exponential test needs rank >= 1");
  if (!(sparsity >= 0.0) || !std::isfinite(sparsity))
    throw InvalidArgument("SyntheticSpec: sparsity must be >= 0");
  if (sparsity >= 1.0 && sparsity != std::floor(sparsity))
    throw InvalidArgument("SyntheticSpec: a sparsity count must be an integer");
  if (static_cast<double>(sparse_count()) > static_cast<double>(m) * static_cast<double>(n))
    throw InvalidArgument("SyntheticSpec: sparsity exceeds m*n");
  if (!std::isfinite(snr_db)) throw InvalidArgument("SyntheticSpec: snr_db must be finite");
}

Eigen::Index SyntheticSpec::sparse_count() const {
  if (sparsity >= 1.0) return static_cast<Eigen::Index>(sparsity);
  return static_cast<Eigen::Index>(std::llround(sparsity * static_cast<double>(m * n)));
}

ExponentialData gen_exponential_test(const SyntheticSpec& spec, Rng& rng) {
  if (spec.kind != SyntheticKind::exponential)
    throw InvalidArgument("gen_exponential_test: spec kind is not exponential");
  spec.validate();
  const Mat U = orthonormalize(gaussian_matrix(spec.m, spec.rank, rng));
  const Mat V = orthonormalize(gaussian_matrix(spec.n, spec.rank, rng));
  Vec sigma(spec.rank);
  for (Eigen::Index i = 0; i < spec.rank; ++i) sigma(i) = rng.uniform(0.0, 0.2);

  ExponentialData out;
  out.Y0 = U * sigma.asDiagonal() * V.transpose();

  std::vector<double> mags(static_cast<std::size_t>(out.Y0.size()));
  std::transform(out.Y0.data(), out.Y0.data() + out.Y0.size(), mags.begin(),
                 [](double v) { return std::abs(v); });
  const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
  std::nth_element(mags.begin(), mid, mags.end());
  double median = *mid;
  if (mags.size() % 2 == 0) median = 0.5 * (median + *std::max_element(mags.begin(), mid));
  const double mean = 0.1 * median;

  out.Y = out.Y0;
  for (Eigen::Index i = 0; i < spec.m; ++i)
    for (Eigen::Index j = 0; j < spec.n; ++j) out.Y(i, j) += mean > 0.0 ? rng.exponential(mean) : 0.0;
  return out;
}

GaussianData gen_gaussian_test(const SyntheticSpec& spec, Rng& rng) {
  if (spec.kind != SyntheticKind::gaussian_sparse)
    throw InvalidArgument("gen_gaussian_test: spec kind is not gaussian_sparse");
  spec.validate();
  const Eigen::Index m = spec.m;
  const Eigen::Index n = spec.n;

  GaussianData out;
  const Mat g1 = gaussian_matrix(m, spec.rank, rng);
  const Mat g2 = gaussian_matrix(spec.rank, n, rng);
  out.L0 = g1 * g2;

  // Seeded Fisher-Yates prefix over row-major linear indices.
  const Eigen::Index total = m * n;
  const Eigen::Index p = spec.sparse_count();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  for (Eigen::Index i = 0; i < total; ++i) idx[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = 0; i < p; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  out.S0 = Mat::Zero(m, n);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Eigen::Index k = idx[static_cast<std::size_t>(i)];
    double v = 0.0;
    while (v == 0.0) v = rng.uniform(-100.0, 100.0);
    out.S0(k / n, k % n) = v;
  }

  Mat z = gaussian_matrix(m, n, rng);
  const double signal = (out.L0 + out.S0).norm();
  const double noise = z.norm();
  if (signal > 0.0 && noise > 0.0)
    z *= signal / (noise * std::pow(10.0, spec.snr_db / 20.0));
  else
    z.setZero();
  out.Z0 = std::move(z);
  out.Y = out.L0 + out.S0 + out.Z0;
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

RelativeError relative_error_detail(const ProductPoint& x, const ProductPoint& ref) {
  if (x.rows() != ref.rows() || x.cols() != ref.cols())
    throw InvalidArgument("relative_error: dimension mismatch");
  const double nl = ref.L.norm();
  const double ns = ref.S.norm();
  if (nl == 0.0 && ns == 0.0) throw InvalidArgument("relative_error: both reference parts are zero");
  RelativeError out;
  if (nl > 0.0)
    out.value += (x.L - ref.L).norm() / nl;
  else
    out.skipped_L = true;
  if (ns > 0.0)
    out.value += (x.S - ref.S).norm() / ns;
  else
    out.skipped_S = true;
  return out;
}

double relative_error(const ProductPoint& x, const ProductPoint& ref) {
  return relative_error_detail(x, ref).value;
}

SpanError holdout_span_error_detail(const Vec& y1, const Mat& L) {
  if (y1.size() != L.rows()) throw InvalidArgument("holdout_span_error: y1 length must equal rows(L)");
  SpanError out;
  if (L.size() == 0 || L.cwiseAbs().maxCoeff() == 0.0) {
    out.value = y1.norm();
    out.zero_L = true;
    return out;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(L);
  const Eigen::Index r = qr.rank();
  const Mat Q = Mat(qr.householderQ()).leftCols(r);
  out.value = (y1 - Q * (Q.transpose() * y1)).norm();
  return out;
}

double holdout_span_error(const Vec& y1, const Mat& L) { return holdout_span_error_detail(y1, L).value; }

// ---------------------------------------------------------------------------
// Scenario files

ConfigError::ConfigError(int line, const std::string& what)
    : std::invalid_argument("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

const std::set<std::string> kFormulations{"flip-sum", "flip-max", "lag", "sum", "max"};
const std::set<std::string> kSolvers{"qn", "spg", "fista", "pareto"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& v, int line, const std::string& key) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(line, "key '" + key + "' expects a real number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& v, int line, const std::string& key) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(line, "key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(line, "key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(line, "key '" + key + "' expects true or false, got '" + v + "'");
}

void apply_key(Scenario& sc, const std::string& key, const std::string& v, int line) {
  if (key == "kind") {
    if (v == "exp" || v == "exponential")
      sc.data.kind = SyntheticKind::exponential;
    else if (v == "gauss" || v == "gaussian" || v == "gaussian_sparse")
      sc.data.kind = SyntheticKind::gaussian_sparse;
    else
      throw ConfigError(line, "unknown kind '" + v + "'");
  } else if (key == "m") {
    sc.data.m = parse_int(v, line, key);
  } else if (key == "n") {
    sc.data.n = parse_int(v, line, key);
  } else if (key == "rank") {
    sc.data.rank = parse_int(v, line, key);
  } else if (key == "sparsity") {
    sc.data.sparsity = parse_real(v, line, key);
  } else if (key == "snr_db") {
    sc.data.snr_db = parse_real(v, line, key);
  } else if (key == "seed") {
    sc.data.seed = parse_u64(v, line, key);
  } else if (key == "input") {
    sc.input = v;
  } else if (key == "formulation") {
    if (!kFormulations.count(v)) throw ConfigError(line, "unknown formulation '" + v + "'");
    sc.formulation = v;
  } else if (key == "solvers") {
    sc.solvers.clear();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!kSolvers.count(item)) throw ConfigError(line, "unknown solver '" + item + "'");
      sc.solvers.push_back(item);
    }
    if (sc.solvers.empty()) throw ConfigError(line, "solvers list is empty");
  } else if (key == "lambda") {
    sc.lambda = parse_real(v, line, key);
  } else if (key == "tau") {
    sc.tau = parse_real(v, line, key);
  } else if (key == "eps") {
    sc.eps = parse_real(v, line, key);
  } else if (key == "lambda_l") {
    sc.lambda_L = parse_real(v, line, key);
  } else if (key == "lambda_s") {
    sc.lambda_S = parse_real(v, line, key);
  } else if (key == "derive_from_lag") {
    sc.derive_from_lag = parse_bool(v, line, key);
  } else if (key == "nonneg_s") {
    sc.nonneg_S = parse_bool(v, line, key);
  } else if (key == "max_iters") {
    sc.max_iters = static_cast<int>(parse_int(v, line, key));
  } else if (key == "tol") {
    sc.tol = parse_real(v, line, key);
  } else if (key == "reference_tol") {
    sc.reference_tol = parse_real(v, line, key);
  } else if (key == "reference_max_iters") {
    sc.reference_max_iters = static_cast<int>(parse_int(v, line, key));
  } else if (key == "randomized_svd") {
    sc.randomized_svd = parse_bool(v, line, key);
  } else {
    throw ConfigError(line, "unknown key '" + key + "'");
  }
}

bool constrained(const std::string& f) { return f == "sum" || f == "max"; }

void check_scenario(const Scenario& sc, int line) {
  auto fail = [&](const std::string& what) { throw ConfigError(line, "scenario '" + sc.name + "': " + what); };
  if (!sc.input) {
    try {
      sc.data.validate();
    } catch (const InvalidArgument& e) {
      fail(e.what());
    }
  }
  if (sc.max_iters < 0) fail("max_iters must be >= 0");
  if (!(sc.tol > 0.0) || !(sc.reference_tol > 0.0)) fail("tolerances must be positive");
  const bool gaussian = !sc.input && sc.data.kind == SyntheticKind::gaussian_sparse;
  if (sc.derive_from_lag || sc.formulation == "lag") {
    if (!sc.lambda_L || !sc.lambda_S) fail("lambda_l and lambda_s are required");
  } else {
    if (!sc.lambda && !gaussian) fail("lambda is required");
    if (sc.formulation.rfind("flip-", 0) == 0 && !sc.tau) fail("tau is required");
    if (constrained(sc.formulation) && !sc.eps && !gaussian) fail("eps is required");
  }
}

}  // namespace

BenchConfig parse_bench_config(std::istream& in) {
  BenchConfig cfg;
  Scenario defaults;
  std::vector<std::pair<Scenario, int>> pending;
  std::set<std::string> names;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value', got '" + text + "'");
    std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
    if (key.empty()) throw ConfigError(line, "missing key");
    if (value.empty()) throw ConfigError(line, "missing value for key '" + key + "'");

    if (key == "scenario") {
      if (!names.insert(value).second) throw ConfigError(line, "duplicate scenario '" + value + "'");
      Scenario sc = defaults;
      sc.name = value;
      sc.index = static_cast<int>(pending.size());
      pending.emplace_back(std::move(sc), line);
      continue;
    }
    apply_key(pending.empty() ? defaults : pending.back().first, key, value, line);
  }
  if (pending.empty()) pending.emplace_back(defaults, line == 0 ? 1 : line);
  for (auto& [sc, at] : pending) {
    check_scenario(sc, at);
    cfg.scenarios.push_back(std::move(sc));
  }
  return cfg;
}

BenchConfig read_bench_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open scenario file " + path.string());
  return parse_bench_config(in);
}

// ---------------------------------------------------------------------------
// Running

namespace {

Formulation make_formulation(const std::string& name, double lambda, double tau, double eps,
                             double lambda_L, double lambda_S) {
  if (name == "flip-sum") return FlipSum{lambda, tau};
  if (name == "flip-max") return FlipMax{lambda, tau};
  if (name == "sum") return ConstrainedSum{lambda, eps};
  if (name == "max") return ConstrainedMax{lambda, eps};
  return Lagrangian{lambda_L, lambda_S};
}

SolverConfig reference_config(const Scenario& sc) {
  SolverConfig cfg;
  cfg.tol = sc.reference_tol;
  cfg.max_iters = sc.reference_max_iters;
  cfg.randomized_svd = false;
  cfg.record_trace = false;
  // Only the optimality certificate is trusted at reference accuracy.
  cfg.stop_on_objective_change = false;
  return cfg;
}

}  // namespace

SolveResult run_named_solver(const std::string& solver, const Problem& p, const SolverConfig& cfg) {
  const ProductPoint x0 = ProductPoint::zeros(p.rows(), p.cols());
  const bool is_constrained = std::holds_alternative<ConstrainedSum>(p.formulation) ||
                              std::holds_alternative<ConstrainedMax>(p.formulation);
  if (solver == "pareto") {
    if (!is_constrained) throw InvalidArgument("solver 'pareto' needs the sum or max formulation");
    ConstrainedResult r = solve_constrained(p, cfg);
    return std::move(r.solve);
  }
  if (is_constrained)
    throw InvalidArgument("the " + formulation_name(p.formulation) + " formulation runs with solver 'pareto'");
  if (solver == "qn") {
    if (std::holds_alternative<Lagrangian>(p.formulation)) return solve_lag_qn(p, x0, cfg);
    return solve_flip_qn(p, x0, cfg);
  }
  if (solver == "spg") return solve_flip_spg(p, x0, cfg);
  if (solver == "fista") return solve_flip_fista(p, x0, cfg);
  throw InvalidArgument("unknown solver '" + solver + "'");
}

PreparedScenario prepare_scenario(const Scenario& sc) {
  Mat Y;
  std::optional<double> default_lambda;
  std::optional<double> default_eps;
  if (sc.input) {
    Y = read_matrix(*sc.input);
  } else {
    Rng rng(sc.data.seed ^ static_cast<std::uint64_t>(sc.index));
    if (sc.data.kind == SyntheticKind::exponential) {
      Y = gen_exponential_test(sc.data, rng).Y;
    } else {
      GaussianData g = gen_gaussian_test(sc.data, rng);
      default_lambda = 1.0 / std::sqrt(static_cast<double>(std::max(sc.data.m, sc.data.n)));
      default_eps = g.Z0.norm();
      Y = std::move(g.Y);
    }
  }

  const SolverConfig ref_cfg = reference_config(sc);
  const ProductPoint zero = ProductPoint::zeros(Y.rows(), Y.cols());

  if (sc.derive_from_lag) {
    const Problem lag(Y, LinearOp::sum(Y.rows(), Y.cols()), Penalty::least_squares(),
                      Lagrangian{*sc.lambda_L, *sc.lambda_S}, sc.nonneg_S);
    SolveResult ref = solve_lag_qn(lag, zero, ref_cfg);
    const double nuc = nuclear_norm(ref.point.L);
    const double l1 = ref.point.S.cwiseAbs().sum();
    const double eps = (ref.point.L + ref.point.S - Y).norm();
    double lambda = 0.0;
    double tau = 0.0;
    if (sc.formulation == "flip-max" || sc.formulation == "max") {
      lambda = lambda_max_from_oracle(ref.point.L, ref.point.S);
      tau = nuc;
    } else {
      lambda = *sc.lambda_S / *sc.lambda_L;
      tau = nuc + lambda * l1;
    }
    Problem p(Y, LinearOp::sum(Y.rows(), Y.cols()), Penalty::least_squares(),
              make_formulation(sc.formulation, lambda, tau, eps, *sc.lambda_L, *sc.lambda_S), sc.nonneg_S);
    return {std::move(p), std::move(ref.point)};
  }

  const double lambda = sc.lambda.value_or(default_lambda.value_or(1.0));
  const double eps = sc.eps.value_or(default_eps.value_or(0.0));
  Problem p(Y, LinearOp::sum(Y.rows(), Y.cols()), Penalty::least_squares(),
            make_formulation(sc.formulation, lambda, sc.tau.value_or(0.0), eps, sc.lambda_L.value_or(1.0),
                             sc.lambda_S.value_or(1.0)),
            sc.nonneg_S);
  const std::string ref_solver = constrained(sc.formulation) ? "pareto"
                                 : sc.formulation == "flip-sum" ? "spg"
                                                                : "qn";
  SolveResult ref = run_named_solver(ref_solver, p, ref_cfg);
  return {std::move(p), std::move(ref.point)};
}

BenchReport run_benchmark(const BenchConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  BenchReport report;
  for (const Scenario& sc : cfg.scenarios) {
    std::optional<PreparedScenario> prepared;
    std::string prep_error;
    try {
      prepared.emplace(prepare_scenario(sc));
    } catch (const std::exception& e) {
      prep_error = std::string("preparation failed: ") + e.what();
    }

    for (const std::string& solver : sc.solvers) {
      BenchRow row;
      row.scenario = sc.name;
      row.solver = solver;
      if (!prepared) {
        row.error = prep_error;
        report.rows.push_back(std::move(row));
        continue;
      }
      const ProductPoint& ref = prepared->reference;
      SolverConfig scfg;
      scfg.max_iters = sc.max_iters;
      scfg.tol = sc.tol;
      scfg.randomized_svd = sc.randomized_svd;
      scfg.seed = sc.data.seed ^ static_cast<std::uint64_t>(sc.index);
      scfg.clock = std::make_shared<Stopwatch>();
      scfg.observer = [&ref](const IterationInfo& info) -> std::optional<double> {
        try {
          return relative_error(info.point, ref);
        } catch (const InvalidArgument&) {
          return std::nullopt;
        }
      };
      try {
        SolveResult res = run_named_solver(solver, prepared->problem, scfg);
        row.seconds = scfg.clock->elapsed();
        row.ok = true;
        row.status = res.status;
        row.iterations = res.iterations;
        row.objective = res.objective;
        row.residual = res.residual_norm;
        if (!res.trace.rows.empty()) row.final_ref_error = res.trace.rows.back().ref_error;
        row.trace_path = out_dir / (sc.name + "_" + solver + ".csv");
        std::ofstream out(row.trace_path);
        if (!out) throw InvalidArgument("cannot write " + row.trace_path.string());
        write_trace_csv(out, res.trace);
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace spcp
