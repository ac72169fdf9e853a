#pragma once

#include <cstdint>

namespace cytrm {

// Critical pole height of the percolation argument: below log(d/(d-1)) the
// meander is confined to a finite cluster and is recurrent.
double percolation_threshold(std::uint32_t d);

// Lower bound on the probability of the move-forward event MF_{N,T}:
// (1 - 1/(d+1))^N * [1 - e^{N-(d+1)T} ((d+1)T/N)^N], clamped to [0,1].
// *clamped reports whether clamping fired (T at or below N/(d+1)).
double p1(int N, double T, std::uint32_t d, bool* clamped = nullptr);

// Lower bound on the frontier-departure probability:
// (d-1)/(d+1) * (1 - e^{-(d-1)T/2}).
double frontier_lb(std::uint32_t d, double T);

// Acceptable-return bound, the product frontier_lb * p1.
double p2(int N, double T, std::uint32_t d);

// Drift of the dominating walk exactly as printed, with the (1-1/d)^N factor:
// N (d-1)/(d+1) (1-e^{-(d-1)T/2}) (1-1/d)^N [1 - e^{N-(d+1)T}((d+1)T/N)^N] - 2.
double drift(int N, double T, std::uint32_t d);

// Tighter constituent-based variant using (1-1/(d+1))^N, equal to N*p2 - 2.
double drift_strong(int N, double T, std::uint32_t d);

// Coefficient of d^{-2} in the critical-height expansion: 1 - u(1-u) - (1-u)^2/6.
double tc_coefficient(double u);

// Two-term expansion of the critical height: 1/d + tc_coefficient(u)/d^2.
double tc_asymptotic(double u, std::uint32_t d);

// a = tau^2 e^{2 + tau/d} / (d (e - 1)), the geometric ratio of the monotonicity
// calculation (tau = T*d).
double hammond_a(std::uint32_t d, double tau);

// Closed form of sum_{k>=1} (k+2)^2 a^k = a(4a^2 - 11a + 9)/(1-a)^3, |a| < 1.
double series_sum(double a);

// Bracketed factor of the lower bound on dp_n/dT (coefficient of p_{n-1}):
// d e^{-tau} - tau(tau+1) - 6 e^{-1} * series_sum(a). Strictly positive from
// d = 26 on at tau = 1 + 2/d.
double hammond_derivative_lb(std::uint32_t d, double tau);

// Dominating walk: start at 2, step +(N-2) with probability p, else -2; ruin
// is the first time the walk goes strictly below 2.
struct WalkSpec {
  double p = 0.0;
  int N = 4;

  int up_step() const { return N - 2; }
  int down_step() const { return 2; }
  double drift() const { return static_cast<double>(N) * p - 2.0; }
};

// Probability the walk never goes strictly below its start. Computed by value
// iteration on the ruin recursion h(x) = p h(x+N-2) + (1-p) h(x-2) with
// h(x) = 1 for x < 0 (coordinates relative to the start), truncated at a
// ceiling derived from the Lundberg root of p z^N - z^2 + (1-p) = 0 so that
// the truncation error stays below the tolerance. Nonpositive drift makes the
// walk recurrent, so the survival probability is exactly zero there (no finite
// ceiling exists in that regime).
double walk_survival(const WalkSpec& spec, double tolerance);

}  // namespace cytrm
