#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cytrm/bounds.hpp"
#include "cytrm/meander.hpp"
#include "cytrm/tracker.hpp"

namespace cytrm {

// Monte Carlo estimate with a normal-approximation confidence interval.
// Truncated (budget-exceeded) trials are excluded from the numerator but
// always reported.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double truncated_fraction = 0.0;
};

Estimate bernoulli_estimate(std::uint64_t successes, std::uint64_t n, std::uint64_t truncated);

// Optional per-trajectory auditing (used by the acceptance suite to run the
// direction-conflict check across full estimation grids).
struct TraceAudit {
  std::uint64_t trajectories = 0;
  std::uint64_t conflict_failures = 0;
};

// Fraction of trials whose trace reaches the level target. Trial t uses the
// sub-seed derived from (seed, t), so adding trials extends the sample.
Estimate estimate_escape(const TreeShape& shape, std::uint32_t level, std::uint64_t trials,
                         std::uint64_t seed, const TraceBudget& budget, int threads = 1,
                         TraceAudit* audit = nullptr);

// Mean number of good-and-uncovered offspring of a good non-root vertex,
// sampled directly from the conditioned environment (no trajectory).
Estimate estimate_gw_mean(std::uint32_t d, double T, std::uint64_t trials, std::uint64_t seed,
                          int threads = 1);

enum class BoundCheck { Frontier, MF, Acceptable, BadReturnMax };

std::optional<BoundCheck> parse_bound_check(const std::string& name);
std::string bound_check_name(BoundCheck check);

struct VerifyParams {
  std::uint32_t d = 16;
  double T = 0.495;
  double u = 1.0;
  int N = 4;
  std::uint64_t trials = 10000;  // traces (fresh starts for the MF check)
  std::uint64_t seed = 1;
  std::uint64_t max_crossings = 4000;  // per-trace budget for episode harvesting
  int threads = 1;
};

struct VerifyResult {
  std::string name;
  VerifyParams params;
  double bound = 0.0;
  Estimate empirical;  // over qualifying events; mean == max loss for BadReturnMax
  bool pass = false;
  std::uint64_t qualifying = 0;
  std::uint64_t unresolved = 0;  // episodes cut off by the trace budget
  std::uint64_t mf_witnesses = 0;
  std::uint64_t mf_useful_violations = 0;  // witnesses with |U_tau| < N-2
  int max_loss = 0;
  TraceAudit audit;
};

// Runs the matching detector over fresh simulations and compares against the
// analytic bound with a one-sided 3-sigma margin (hard <= 2 for BadReturnMax).
VerifyResult verify_bound(BoundCheck check, const VerifyParams& params,
                          bool audit_conflicts = false);

// One line of JSON per checked inequality, byte-stable for a given result.
std::string verify_result_json(const VerifyResult& result);

struct SweepPoint {
  double u;
  double T;
  std::uint32_t d;
  std::uint32_t level;
  std::uint64_t trials;
  Estimate estimate;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::uint64_t seed = 0;
  TraceBudget budget;
  double wall_seconds = 0.0;  // metadata only, excluded from CSV
};

// estimate_escape at every (u, T) grid point; point order is the row-major
// order of (u_grid, T_grid); reproducible by seed.
SweepResult sweep(std::span<const double> u_grid, std::span<const double> T_grid,
                  std::uint32_t d, std::uint32_t level, std::uint64_t trials,
                  std::uint64_t seed, const TraceBudget& budget, int threads = 1);

// CSV with header u,T,d,level,trials,mean,stderr,ci_lo,ci_hi,truncated.
std::string sweep_csv(const SweepResult& result);

// JSON mirror including run metadata (seed, budgets, wall time).
std::string sweep_json(const SweepResult& result);

// Full-precision (round-trippable) decimal formatting used by all emitters.
std::string format_double(double v);

}  // namespace cytrm
