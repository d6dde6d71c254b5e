#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcp/matrix.hpp"
#include "spcp/operators.hpp"
#include "spcp/pareto.hpp"
#include "spcp/solvers.hpp"

namespace spcp {

enum class SyntheticKind { exponential, gaussian_sparse };

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::exponential;
  Eigen::Index m = 0;
  Eigen::Index n = 0;
  Eigen::Index rank = 0;
  // Values in [0, 1) are a fraction of m*n, values >= 1 an entry count.
  double sparsity = 0.0;
  double snr_db = 45.0;
  std::uint64_t seed = 0;

  void validate() const;
  // Number of sparse entries requested.
  Eigen::Index sparse_count() const;
};

struct ExponentialData {
  Mat Y;
  Mat Y0;
};

struct GaussianData {
  Mat Y;
  Mat L0;
  Mat S0;
  Mat Z0;
};

// Y0 = U diag(sigma) V^T with Haar factors and sigma ~ U[0, 0.2]; Y = Y0 + E
// with E exponential of mean 0.1 * median|Y0|.
ExponentialData gen_exponential_test(const SyntheticSpec& spec, Rng& rng);

// Y = G1 G2 + S0 + Z0 with exactly sparse_count() entries of S0 drawn from
// U[-100, 100] and Z0 Gaussian at the requested SNR.
GaussianData gen_gaussian_test(const SyntheticSpec& spec, Rng& rng);

struct RelativeError {
  double value = 0.0;
  bool skipped_L = false;  // reference L is zero
  bool skipped_S = false;  // reference S is zero
};

// |L - L*|_F / |L*|_F + |S - S*|_F / |S*|_F. A zero reference component drops
// its term; both zero throws.
RelativeError relative_error_detail(const ProductPoint& x, const ProductPoint& ref);
double relative_error(const ProductPoint& x, const ProductPoint& ref);

struct SpanError {
  double value = 0.0;
  bool zero_L = false;
};

// Distance of y1 from range(L). Zero L gives |y1|_2 with zero_L set.
SpanError holdout_span_error_detail(const Vec& y1, const Mat& L);
double holdout_span_error(const Vec& y1, const Mat& L);

// ---------------------------------------------------------------------------
// Scenario files: one `key = value` per line, `#` starts a comment. Keys
// before the first `scenario = NAME` line are defaults for every scenario.

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

struct Scenario {
  std::string name = "scenario";
  int index = 0;
  SyntheticSpec data;
  std::optional<std::filesystem::path> input;  // replaces generated data
  std::string formulation = "flip-max";
  std::vector<std::string> solvers{"qn"};
  std::optional<double> lambda;
  std::optional<double> tau;
  std::optional<double> eps;
  std::optional<double> lambda_L;
  std::optional<double> lambda_S;
  // Derive lambda / tau / eps from a high-accuracy Lagrangian solve with
  // (lambda_L, lambda_S) and use that solve as the reference.
  bool derive_from_lag = false;
  bool nonneg_S = false;
  int max_iters = 2000;
  double tol = 1e-8;
  double reference_tol = 1e-12;
  int reference_max_iters = 20000;
  bool randomized_svd = true;
};

struct BenchConfig {
  std::vector<Scenario> scenarios;
};

BenchConfig parse_bench_config(std::istream& in);
BenchConfig read_bench_config(const std::filesystem::path& path);

struct BenchRow {
  std::string scenario;
  std::string solver;
  bool ok = false;
  std::string error;
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
  double objective = 0.0;
  double residual = 0.0;
  double seconds = 0.0;
  std::optional<double> final_ref_error;
  std::filesystem::path trace_path;
};

struct BenchReport {
  std::vector<BenchRow> rows;
};

// Problem actually run for a scenario after data generation and parameter
// derivation, with its reference solution.
struct PreparedScenario {
  Problem problem;
  ProductPoint reference;
};

PreparedScenario prepare_scenario(const Scenario& sc);

// Runs one solver by name: qn, spg, fista (flipped and Lagrangian
// formulations) or pareto (constrained ones).
SolveResult run_named_solver(const std::string& solver, const Problem& p, const SolverConfig& cfg);

// Writes `<out_dir>/<scenario>_<solver>.csv` per solver. Reference solutions
// are computed before any timed solve; failures are recorded, not thrown.
BenchReport run_benchmark(const BenchConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace spcp
