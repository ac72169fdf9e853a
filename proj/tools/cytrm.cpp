// Command-line front end: simulation traces, escape estimation, phase-diagram
// sweeps, closed-form bound evaluation, and bound-vs-Monte-Carlo verification.
//
// Exit codes: 0 success, 1 usage or domain error, 2 verification failure.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cytrm/bounds.hpp"
#include "cytrm/meander.hpp"
#include "cytrm/montecarlo.hpp"

namespace {

using namespace cytrm;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CYTRM_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      // fall through to the fixed default
    }
  }
  return 1;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::domain_error("cannot open output file: " + out_path);
  out << text;
}

std::string outcome_line(const TraceOutcome& o) {
  switch (o.kind) {
    case TraceOutcome::Kind::Returned:
      return "returned " + format_double(o.at_elapsed) + "\n";
    case TraceOutcome::Kind::ReachedLevel:
      return "reached_level " + std::to_string(o.level) + " " + format_double(o.at_elapsed) +
             "\n";
    case TraceOutcome::Kind::BudgetExceeded:
      return "budget_exceeded " + std::to_string(o.crossings_used) + "\n";
  }
  return "\n";
}

std::string dump_trace(const TrajectoryRecord& rec) {
  std::string s;
  auto crossings = rec.crossings();
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    const CrossingEvent& c = crossings[i];
    s += format_double(c.time);
    s += ' ';
    s += rec.id_of(c.edge_child);
    s += ' ';
    s += format_double(c.height);
    s += ' ';
    s += c.kind == BridgeKind::Cross ? "cross" : "dbar";
    s += ' ';
    s += c.direction_after == Direction::Up ? "up" : "down";
    s += '\n';
  }
  return s + outcome_line(rec.outcome());
}

std::string bounds_json(std::uint32_t d, double T, double u, int N) {
  bool clamped = false;
  const double v_p1 = p1(N, T, d, &clamped);
  std::string s = "{";
  s += "\"d\":" + std::to_string(d);
  s += ",\"T\":" + format_double(T);
  s += ",\"u\":" + format_double(u);
  s += ",\"N\":" + std::to_string(N);
  s += ",\"tau\":" + format_double(T * d);
  s += ",\"percolation_threshold\":" + format_double(percolation_threshold(d));
  s += ",\"p1\":" + format_double(v_p1);
  s += std::string(",\"p1_clamped\":") + (clamped ? "true" : "false");
  s += ",\"frontier_lb\":" + format_double(frontier_lb(d, T));
  s += ",\"p2\":" + format_double(p2(N, T, d));
  s += ",\"drift\":" + format_double(drift(N, T, d));
  s += ",\"drift_strong\":" + format_double(drift_strong(N, T, d));
  s += ",\"tc_coefficient\":" + format_double(tc_coefficient(u));
  s += ",\"tc_asymptotic\":" + format_double(tc_asymptotic(u, d));
  const double tau = T * d;
  if (tau >= 1.0 && tau <= 1.0 + 2.0 / d && hammond_a(d, tau) < 1.0) {
    const double a = hammond_a(d, tau);
    s += ",\"hammond_a\":" + format_double(a);
    s += ",\"series_sum\":" + format_double(series_sum(a));
    s += ",\"hammond_derivative_lb\":" + format_double(hammond_derivative_lb(d, tau));
  } else {
    s += ",\"hammond_a\":null,\"series_sum\":null,\"hammond_derivative_lb\":null";
  }
  s += "}\n";
  return s;
}

std::string estimate_json(const SweepResult& result) { return sweep_json(result) + "\n"; }

std::vector<double> parse_range(const std::string& spec) {
  // lo:hi:count, inclusive endpoints
  const auto a = spec.find(':');
  const auto b = spec.rfind(':');
  if (a == std::string::npos || b == a) throw std::domain_error("range must be lo:hi:count");
  const double lo = std::stod(spec.substr(0, a));
  const double hi = std::stod(spec.substr(a + 1, b - a - 1));
  const int count = std::stoi(spec.substr(b + 1));
  if (count < 1) throw std::domain_error("range count must be positive");
  std::vector<double> out;
  if (count == 1) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cytrm: cyclic-time random meander simulator and bound verifier"};
  app.require_subcommand(1);

  std::uint32_t d = 4;
  double T = 0.5;
  double u = 1.0;
  int N = 4;
  std::uint32_t level = 0;
  std::uint64_t trials = 10000;
  std::uint64_t seed = default_seed();
  std::uint64_t max_crossings = 1'000'000;
  std::uint64_t verify_max_crossings = 4000;  // per-trace budget for episode harvesting
  std::uint32_t max_depth = 0;
  int threads = 1;
  std::string format = "csv";
  std::string out_path;
  bool dump = false;
  bool verify_all = false;
  std::vector<std::string> verify_names;
  std::vector<double> u_grid;
  std::vector<double> t_grid;
  std::string t_range;

  auto add_common = [&](CLI::App* cmd, bool with_output) {
    cmd->add_option("--d", d, "offspring count per vertex");
    cmd->add_option("--seed", seed, "run seed (default from CYTRM_SEED when set)");
    if (with_output) {
      cmd->add_option("--format", format, "output format: csv or json")
          ->check(CLI::IsMember({"csv", "json"}));
      cmd->add_option("--out", out_path, "output file (default: standard output)");
    }
  };

  CLI::App* sim = app.add_subcommand("simulate", "run one trace");
  add_common(sim, true);
  sim->add_option("--u", u, "cross probability");
  sim->add_option("--T", T, "pole height");
  sim->add_option("--level", level, "stop when this tree level is reached");
  sim->add_option("--max-crossings", max_crossings, "crossing budget");
  sim->add_option("--max-depth", max_depth, "depth budget (0 = derived)");
  sim->add_flag("--dump", dump, "print one line per crossing");

  CLI::App* est = app.add_subcommand("estimate", "escape probability at one point");
  add_common(est, true);
  est->add_option("--u", u, "cross probability");
  est->add_option("--T", T, "pole height");
  est->add_option("--level", level, "escape level")->required();
  est->add_option("--trials", trials, "number of trials");
  est->add_option("--max-crossings", max_crossings, "crossing budget per trial");
  est->add_option("--max-depth", max_depth, "depth budget (0 = derived)");
  est->add_option("--threads", threads, "worker threads");

  CLI::App* swp = app.add_subcommand("sweep", "escape probability over a (u,T) grid");
  add_common(swp, true);
  swp->add_option("--u", u_grid, "u grid point (repeatable)");
  swp->add_option("--T", t_grid, "T grid point (repeatable)");
  swp->add_option("--T-range", t_range, "T grid as lo:hi:count");
  swp->add_option("--level", level, "escape level")->required();
  swp->add_option("--trials", trials, "trials per grid point");
  swp->add_option("--max-crossings", max_crossings, "crossing budget per trial");
  swp->add_option("--max-depth", max_depth, "depth budget (0 = derived)");
  swp->add_option("--threads", threads, "worker threads");

  CLI::App* bnd = app.add_subcommand("bounds", "evaluate every closed-form bound");
  add_common(bnd, true);
  bnd->add_option("--u", u, "cross probability");
  bnd->add_option("--T", T, "pole height");
  bnd->add_option("--N", N, "move-forward length");

  CLI::App* ver = app.add_subcommand("verify", "bound-vs-Monte-Carlo checks");
  add_common(ver, true);
  ver->add_option("--u", u, "cross probability");
  ver->add_option("--T", T, "pole height");
  ver->add_option("--N", N, "move-forward length");
  ver->add_option("--trials", trials, "traces (fresh starts for mf)");
  ver->add_option("--max-crossings", verify_max_crossings,
                  "crossing budget per harvested trace (default 4000)");
  ver->add_option("--threads", threads, "worker threads");
  ver->add_flag("--all", verify_all, "run frontier, mf, acceptable, bad_return_max");
  ver->add_option("--name", verify_names,
                  "check name: frontier, mf, acceptable, bad_return_max (repeatable)");

  CLI::App* ang = app.add_subcommand("angel", "good-and-uncovered offspring mean");
  add_common(ang, true);
  ang->add_option("--T", T, "pole height");
  ang->add_option("--trials", trials, "number of sampled parent vertices");
  ang->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (sim->parsed()) {
      TreeShape shape{d, T, u, nullptr};
      TraceBudget budget{max_crossings, level, max_depth};
      auto [outcome, rec] = trace(shape, seed, budget, RecordMode::Full);
      emit(dump ? dump_trace(rec) : outcome_line(outcome), out_path);
      return 0;
    }
    if (est->parsed()) {
      TraceBudget budget{max_crossings, level, max_depth};
      SweepResult result =
          sweep(std::vector<double>{u}, std::vector<double>{T}, d, level, trials, seed, budget,
                threads);
      emit(format == "json" ? estimate_json(result) : sweep_csv(result), out_path);
      return 0;
    }
    if (swp->parsed()) {
      if (!t_range.empty()) {
        for (double x : parse_range(t_range)) t_grid.push_back(x);
      }
      if (u_grid.empty()) u_grid.push_back(u);
      TraceBudget budget{max_crossings, level, max_depth};
      SweepResult result = sweep(u_grid, t_grid, d, level, trials, seed, budget, threads);
      emit(format == "json" ? estimate_json(result) : sweep_csv(result), out_path);
      return 0;
    }
    if (bnd->parsed()) {
      emit(bounds_json(d, T, u, N), out_path);
      return 0;
    }
    if (ver->parsed()) {
      if (verify_all) {
        verify_names = {"frontier", "mf", "acceptable", "bad_return_max"};
      }
      if (verify_names.empty()) throw std::domain_error("verify needs --name or --all");
      bool all_pass = true;
      std::string text;
      for (const std::string& name : verify_names) {
        auto check = parse_bound_check(name);
        if (!check) throw std::domain_error("unknown check name: " + name);
        VerifyParams params{d, T, u, N, trials, seed, verify_max_crossings, threads};
        VerifyResult result = verify_bound(*check, params);
        all_pass = all_pass && result.pass;
        text += verify_result_json(result) + "\n";
      }
      emit(text, out_path);
      return all_pass ? 0 : 2;
    }
    if (ang->parsed()) {
      Estimate e = estimate_gw_mean(d, T, trials, seed, threads);
      std::string text;
      if (format == "json") {
        text = "{\"d\":" + std::to_string(d) + ",\"T\":" + format_double(T) +
               ",\"trials\":" + std::to_string(trials) + ",\"mean\":" + format_double(e.mean) +
               ",\"stderr\":" + format_double(e.std_error) +
               ",\"ci_lo\":" + format_double(e.ci_lo) + ",\"ci_hi\":" + format_double(e.ci_hi) +
               "}\n";
      } else {
        text = "d,T,trials,mean,stderr,ci_lo,ci_hi\n" + std::to_string(d) + "," +
               format_double(T) + "," + std::to_string(trials) + "," + format_double(e.mean) +
               "," + format_double(e.std_error) + "," + format_double(e.ci_lo) + "," +
               format_double(e.ci_hi) + "\n";
      }
      emit(text, out_path);
      return 0;
    }
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
