#include "cytrm/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace cytrm {

double percolation_threshold(std::uint32_t d) {
  if (d < 2) throw std::domain_error("percolation threshold needs d >= 2");
  return std::log(static_cast<double>(d) / (d - 1.0));
}

namespace {

double mf_bracket(int N, double T, std::uint32_t d) {
  const double x = (d + 1.0) * T;
  return 1.0 - std::exp(N - x) * std::pow(x / N, N);
}

}  // namespace

double p1(int N, double T, std::uint32_t d, bool* clamped) {
  if (N < 1) throw std::domain_error("p1 needs N >= 1");
  if (!(T > 0.0)) throw std::domain_error("p1 needs T > 0");
  const double base = std::pow(1.0 - 1.0 / (d + 1.0), N);
  const double raw = base * mf_bracket(N, T, d);
  const double out = std::clamp(raw, 0.0, 1.0);
  if (clamped != nullptr) *clamped = out != raw;
  return out;
}

double frontier_lb(std::uint32_t d, double T) {
  if (d < 2) throw std::domain_error("frontier bound needs d >= 2");
  if (!(T > 0.0)) throw std::domain_error("frontier bound needs T > 0");
  return (d - 1.0) / (d + 1.0) * (1.0 - std::exp(-(d - 1.0) * T / 2.0));
}

double p2(int N, double T, std::uint32_t d) { return frontier_lb(d, T) * p1(N, T, d); }

double drift(int N, double T, std::uint32_t d) {
  const double flb = (d - 1.0) / (d + 1.0) * (1.0 - std::exp(-(d - 1.0) * T / 2.0));
  return N * flb * std::pow(1.0 - 1.0 / d, N) * mf_bracket(N, T, d) - 2.0;
}

double drift_strong(int N, double T, std::uint32_t d) { return N * p2(N, T, d) - 2.0; }

double tc_coefficient(double u) {
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("u must lie in [0,1]");
  return 1.0 - u * (1.0 - u) - (1.0 - u) * (1.0 - u) / 6.0;
}

double tc_asymptotic(double u, std::uint32_t d) {
  if (d < 1) throw std::domain_error("d must be at least 1");
  const double dd = d;
  return 1.0 / dd + tc_coefficient(u) / (dd * dd);
}

double hammond_a(std::uint32_t d, double tau) {
  if (d < 2) throw std::domain_error("hammond_a needs d >= 2");
  if (!(tau >= 1.0)) throw std::domain_error("hammond_a needs tau >= 1");
  return tau * tau * std::exp(2.0 + tau / d) / (d * (std::exp(1.0) - 1.0));
}

double series_sum(double a) {
  if (!(std::fabs(a) < 1.0)) throw std::domain_error("series_sum needs |a| < 1");
  const double one_minus = 1.0 - a;
  return a * (4.0 * a * a - 11.0 * a + 9.0) / (one_minus * one_minus * one_minus);
}

double hammond_derivative_lb(std::uint32_t d, double tau) {
  if (!(tau >= 1.0 && tau <= 1.0 + 2.0 / d)) {
    throw std::domain_error("hammond derivative bound needs 1 <= tau <= 1 + 2/d");
  }
  const double a = hammond_a(d, tau);
  if (a >= 1.0) throw std::domain_error("hammond derivative bound needs a < 1");
  return d * std::exp(-tau) - tau * (tau + 1.0) - 6.0 * std::exp(-1.0) * series_sum(a);
}

namespace {

// Unique root in (0,1) of p z^N - z^2 + (1-p) = 0 for positive drift; the ruin
// probability from relative level x decays like z*^x.
double lundberg_root(double p, int N) {
  auto g = [&](double z) { return p * std::pow(z, N) - z * z + (1.0 - p); };
  double lo = 1e-12;
  double hi = 1.0 - 1e-12;
  if (g(lo) <= 0.0 || g(hi) >= 0.0) {
    throw std::runtime_error("lundberg root bracketing failed");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double walk_survival(const WalkSpec& spec, double tolerance) {
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) throw std::domain_error("walk needs p in [0,1]");
  if (spec.N < 1) throw std::domain_error("walk needs N >= 1");
  if (!(tolerance > 0.0)) throw std::domain_error("tolerance must be positive");

  if (spec.p >= 1.0) return spec.N >= 2 ? 1.0 : 0.0;  // never steps down (N >= 2)
  if (spec.drift() <= 0.0) return 0.0;                // recurrent walk, ruin is certain

  const int up = spec.up_step();  // positive drift implies N >= 3
  const double z = lundberg_root(spec.p, spec.N);
  const double ceiling = std::log(tolerance / 4.0) / std::log(z);
  if (!(ceiling > 0.0) || ceiling > 4e6) {
    throw std::runtime_error("walk_survival: no workable ceiling at drift " +
                             std::to_string(spec.drift()));
  }
  const std::size_t m = static_cast<std::size_t>(ceiling) + up + 4;

  // Monotone value iteration from h == 0; levels at or above the ceiling are
  // treated as never ruined, an underestimate of at most z^m < tolerance/4.
  std::vector<double> h(m, 0.0);
  std::vector<double> next(m, 0.0);
  const double q = 1.0 - spec.p;
  const std::size_t max_iters = 4'000'000;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    double delta = 0.0;
    for (std::size_t x = 0; x < m; ++x) {
      const double up_val = x + up < m ? h[x + up] : 0.0;
      const double down_val = x >= 2 ? h[x - 2] : 1.0;
      next[x] = spec.p * up_val + q * down_val;
      delta = std::max(delta, next[x] - h[x]);
    }
    h.swap(next);
    if (delta < 1e-15) return 1.0 - h[0];
  }
  throw std::runtime_error("walk_survival: value iteration did not converge");
}

}  // namespace cytrm
