#include "cytrm/montecarlo.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "cytrm/rng.hpp"

namespace cytrm {

namespace {

constexpr double kZ95 = 1.96;

template <typename Fn>
void parallel_trials(std::uint64_t trials, int threads, Fn&& per_trial) {
  if (threads < 1) throw std::domain_error("thread count must be positive");
  if (threads == 1 || trials < 2) {
    for (std::uint64_t t = 0; t < trials; ++t) per_trial(t);
    return;
  }
  const auto workers = static_cast<std::uint64_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::uint64_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::uint64_t t = w; t < trials; t += workers) per_trial(t);
    });
  }
  for (auto& th : pool) th.join();
}

void atomic_max(std::atomic<int>& target, int value) {
  int cur = target.load();
  while (value > cur && !target.compare_exchange_weak(cur, value)) {
  }
}

}  // namespace

Estimate bernoulli_estimate(std::uint64_t successes, std::uint64_t n, std::uint64_t truncated) {
  Estimate est;
  est.n = n;
  if (n == 0) return est;
  est.mean = static_cast<double>(successes) / static_cast<double>(n);
  est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n));
  est.ci_lo = est.mean - kZ95 * est.std_error;
  est.ci_hi = est.mean + kZ95 * est.std_error;
  est.truncated_fraction = static_cast<double>(truncated) / static_cast<double>(n);
  return est;
}

Estimate estimate_escape(const TreeShape& shape, std::uint32_t level, std::uint64_t trials,
                         std::uint64_t seed, const TraceBudget& budget, int threads,
                         TraceAudit* audit) {
  if (trials < 1) throw std::domain_error("at least one trial is required");
  shape.validate();
  TraceBudget b = budget;
  b.level_target = level;

  std::atomic<std::uint64_t> reached{0};
  std::atomic<std::uint64_t> truncated{0};
  std::atomic<std::uint64_t> conflicts{0};
  const RecordMode mode = audit != nullptr ? RecordMode::Full : RecordMode::Outcome;

  parallel_trials(trials, threads, [&](std::uint64_t t) {
    auto [outcome, record] = trace(shape, trial_seed(seed, t), b, mode);
    if (outcome.kind == TraceOutcome::Kind::ReachedLevel) reached.fetch_add(1);
    if (outcome.kind == TraceOutcome::Kind::BudgetExceeded) truncated.fetch_add(1);
    if (audit != nullptr && !check_no_direction_conflict(record)) conflicts.fetch_add(1);
  });

  if (audit != nullptr) {
    audit->trajectories += trials;
    audit->conflict_failures += conflicts.load();
  }
  return bernoulli_estimate(reached.load(), trials, truncated.load());
}

Estimate estimate_gw_mean(std::uint32_t d, double T, std::uint64_t trials, std::uint64_t seed,
                          int threads) {
  if (trials < 1) throw std::domain_error("at least one trial is required");
  if (d < 1 || !(T > 0.0)) throw std::domain_error("gw estimator needs d >= 1 and T > 0");

  std::atomic<std::uint64_t> sum{0};
  std::atomic<std::uint64_t> sum_sq{0};

  parallel_trials(trials, threads, [&](std::uint64_t t) {
    SplitMix64 rng(trial_seed(seed, t));
    // Parent edge conditioned on supporting exactly one bridge; given the
    // count, a Poisson point is uniform on [0, T).
    const double up_height = rng.next_unit() * T;

    std::vector<std::uint32_t> counts(d);
    std::vector<std::vector<double>> heights(d);
    for (std::uint32_t c = 0; c < d; ++c) {
      counts[c] = rng.next_poisson(T);
      heights[c].reserve(counts[c]);
      for (std::uint32_t k = 0; k < counts[c]; ++k) heights[c].push_back(rng.next_unit() * T);
    }

    std::uint64_t value = 0;
    for (std::uint32_t c = 0; c < d; ++c) {
      if (counts[c] != 1) continue;  // good offspring support exactly one bridge
      const double lo = std::min(heights[c][0], up_height);
      const double hi = std::max(heights[c][0], up_height);
      bool covered = false;
      for (std::uint32_t s = 0; s < d && !covered; ++s) {
        if (s == c) continue;
        bool inside = false;
        bool outside = false;
        for (double h : heights[s]) {
          if (h > lo && h < hi) inside = true;
          if (h < lo || h > hi) outside = true;
        }
        covered = inside && outside;
      }
      if (!covered) ++value;
    }
    sum.fetch_add(value);
    sum_sq.fetch_add(value * value);
  });

  Estimate est;
  est.n = trials;
  const double n = static_cast<double>(trials);
  est.mean = static_cast<double>(sum.load()) / n;
  if (trials > 1) {
    const double var =
        (static_cast<double>(sum_sq.load()) - n * est.mean * est.mean) / (n - 1.0);
    est.std_error = std::sqrt(std::max(var, 0.0) / n);
  }
  est.ci_lo = est.mean - kZ95 * est.std_error;
  est.ci_hi = est.mean + kZ95 * est.std_error;
  return est;
}

std::optional<BoundCheck> parse_bound_check(const std::string& name) {
  if (name == "frontier") return BoundCheck::Frontier;
  if (name == "mf") return BoundCheck::MF;
  if (name == "acceptable") return BoundCheck::Acceptable;
  if (name == "bad_return_max") return BoundCheck::BadReturnMax;
  return std::nullopt;
}

std::string bound_check_name(BoundCheck check) {
  switch (check) {
    case BoundCheck::Frontier: return "frontier";
    case BoundCheck::MF: return "mf";
    case BoundCheck::Acceptable: return "acceptable";
    case BoundCheck::BadReturnMax: return "bad_return_max";
  }
  return "?";
}

namespace {

struct EpisodeCounts {
  std::uint64_t qualifying = 0;
  std::uint64_t successes = 0;
  std::uint64_t unresolved = 0;
  int max_loss = 0;
};

// Replays a finished record, harvesting one episode at a time: pick the
// last-crossed useful bridge with a non-root parent endpoint, wait for the
// return (or the grandparent hit), classify the outcome, then pick again.
EpisodeCounts harvest_episodes(const TrajectoryRecord& rec, BoundCheck check, int N) {
  enum class Mode { Seeking, Waiting, Resolving, MFScan };
  const double T = rec.shape().T;
  EpisodeCounts out;
  UsefulBridgeTracker trk(rec);

  Mode mode = Mode::Seeking;
  VertexId e_minus = kNoVertex;
  VertexId e_plus = kNoVertex;
  VertexId wait_dest = kNoVertex;
  std::int64_t watched_entry = -1;  // entry crossing of the watched bridge
  std::size_t watch_mark = 0;       // members inserted before the watch started
  std::size_t watch_death_pos = 0;  // death-log position at the watch start
  double mf_deadline = 0.0;
  int mf_steps = 0;

  auto crossings = rec.crossings();
  for (std::size_t i = 0; i < crossings.size(); ++i) {
    trk.process_exit(i);
    const CrossingEvent& c = crossings[i];
    // Between the phases the tracker state equals the useful set evaluated at
    // this crossing instant; this is where returns and grandparent hits are
    // classified.
    switch (mode) {
      case Mode::Seeking:
        break;
      case Mode::Waiting:
        if (c.to == wait_dest) {
          if (check == BoundCheck::BadReturnMax) {
            int lost = 0;
            const auto& deaths = trk.death_log();
            for (std::size_t k = watch_death_pos; k < deaths.size(); ++k) {
              if (deaths[k] < watch_mark) ++lost;
            }
            ++out.qualifying;
            out.max_loss = std::max(out.max_loss, lost);
            mode = Mode::Seeking;
          } else {
            mode = Mode::Resolving;
          }
        }
        break;
      case Mode::Resolving:
        if (c.to != e_minus && c.to != e_plus) {
          const bool fresh =
              rec.first_entry_crossing(c.to) == static_cast<std::int64_t>(i);
          if (check == BoundCheck::Frontier) {
            ++out.qualifying;
            if (fresh) ++out.successes;
            mode = Mode::Seeking;
          } else if (!fresh) {
            ++out.qualifying;
            mode = Mode::Seeking;
          } else {
            mf_deadline = c.time + T;
            mf_steps = 0;
            mode = Mode::MFScan;
          }
        }
        break;
      case Mode::MFScan:
        if (c.time >= mf_deadline) {
          ++out.qualifying;
          mode = Mode::Seeking;
        } else if (rec.parent(c.to) == c.from) {
          if (++mf_steps == N) {
            ++out.qualifying;
            ++out.successes;
            mode = Mode::Seeking;
          }
        } else {
          ++out.qualifying;
          mode = Mode::Seeking;
        }
        break;
    }
    trk.process_entry(i);
    // (Re)select the watch: the last-crossed useful bridge with a non-root
    // parent endpoint. While waiting, only a strictly newer bridge supersedes
    // the watched one, so member deaths during a root-ward excursion never
    // move the watch. The abandonment rule looks only at the past, so every
    // counted outcome keeps its conditional lower bound.
    if (mode == Mode::Seeking || mode == Mode::Waiting) {
      if (mode == Mode::Seeking) watched_entry = -1;  // resolved; pick afresh
      auto m = trk.last_crossed(/*require_nonroot_parent=*/true);
      if (m && m->entry_crossing > watched_entry) {
        watched_entry = m->entry_crossing;
        e_minus = m->edge_child;
        e_plus = rec.parent(e_minus);
        if (check == BoundCheck::BadReturnMax) {
          wait_dest = rec.parent(e_plus);
          watch_mark = trk.insertion_count();
          watch_death_pos = trk.death_log().size();
        } else {
          wait_dest = e_minus;
        }
        mode = Mode::Waiting;
      }
    }
  }
  if (mode == Mode::MFScan && rec.horizon() >= mf_deadline) {
    ++out.qualifying;  // the window closed; no further crossing can complete it
  } else if (mode != Mode::Seeking) {
    ++out.unresolved;
  }
  return out;
}

VerifyResult verify_mf(const VerifyParams& p, bool audit_conflicts) {
  VerifyResult r;
  r.name = bound_check_name(BoundCheck::MF);
  r.params = p;
  r.bound = p1(p.N, p.T, p.d);

  TreeShape shape{p.d, p.T, p.u, nullptr};
  shape.validate();
  TraceBudget budget;
  budget.max_crossings = static_cast<std::uint64_t>(p.N) + 2;

  std::atomic<std::uint64_t> successes{0};
  std::atomic<std::uint64_t> witnesses{0};
  std::atomic<std::uint64_t> violations{0};
  std::atomic<std::uint64_t> conflicts{0};

  parallel_trials(p.trials, p.threads, [&](std::uint64_t t) {
    auto [outcome, rec] = trace(shape, trial_seed(p.seed, t), budget, RecordMode::Full);
    if (auto w = detect_mf(rec, 0.0, p.N)) {
      successes.fetch_add(1);
      witnesses.fetch_add(1);
      const auto useful = useful_bridges_at(rec, w->completion);
      if (useful.size() + 2 < static_cast<std::size_t>(p.N)) violations.fetch_add(1);
    }
    if (audit_conflicts && !check_no_direction_conflict(rec)) conflicts.fetch_add(1);
  });

  r.qualifying = p.trials;
  r.mf_witnesses = witnesses.load();
  r.mf_useful_violations = violations.load();
  r.empirical = bernoulli_estimate(successes.load(), p.trials, 0);
  r.pass = r.empirical.mean >= r.bound - 3.0 * r.empirical.std_error &&
           r.mf_useful_violations == 0;
  if (audit_conflicts) {
    r.audit.trajectories = p.trials;
    r.audit.conflict_failures = conflicts.load();
  }
  return r;
}

VerifyResult verify_episodic(BoundCheck check, const VerifyParams& p, bool audit_conflicts) {
  VerifyResult r;
  r.name = bound_check_name(check);
  r.params = p;
  switch (check) {
    case BoundCheck::Frontier: r.bound = frontier_lb(p.d, p.T); break;
    case BoundCheck::Acceptable: r.bound = p2(p.N, p.T, p.d); break;
    case BoundCheck::BadReturnMax: r.bound = 2.0; break;
    default: throw std::logic_error("episodic verifier called with the MF check");
  }

  TreeShape shape{p.d, p.T, p.u, nullptr};
  shape.validate();
  TraceBudget budget;
  budget.max_crossings = p.max_crossings;

  std::atomic<std::uint64_t> qualifying{0};
  std::atomic<std::uint64_t> successes{0};
  std::atomic<std::uint64_t> unresolved{0};
  std::atomic<int> max_loss{0};
  std::atomic<std::uint64_t> conflicts{0};

  parallel_trials(p.trials, p.threads, [&](std::uint64_t t) {
    auto [outcome, rec] = trace(shape, trial_seed(p.seed, t), budget, RecordMode::Full);
    const EpisodeCounts counts = harvest_episodes(rec, check, p.N);
    qualifying.fetch_add(counts.qualifying);
    successes.fetch_add(counts.successes);
    unresolved.fetch_add(counts.unresolved);
    atomic_max(max_loss, counts.max_loss);
    if (audit_conflicts && !check_no_direction_conflict(rec)) conflicts.fetch_add(1);
  });

  r.qualifying = qualifying.load();
  r.unresolved = unresolved.load();
  if (check == BoundCheck::BadReturnMax) {
    r.max_loss = max_loss.load();
    r.empirical.mean = r.max_loss;
    r.empirical.n = r.qualifying;
    r.pass = r.max_loss <= 2;
  } else {
    r.empirical = bernoulli_estimate(successes.load(), r.qualifying, 0);
    r.pass = r.empirical.mean >= r.bound - 3.0 * r.empirical.std_error;
  }
  if (audit_conflicts) {
    r.audit.trajectories = p.trials;
    r.audit.conflict_failures = conflicts.load();
  }
  return r;
}

}  // namespace

VerifyResult verify_bound(BoundCheck check, const VerifyParams& params, bool audit_conflicts) {
  if (params.trials < 1) throw std::domain_error("at least one trial is required");
  if (check == BoundCheck::MF) return verify_mf(params, audit_conflicts);
  return verify_episodic(check, params, audit_conflicts);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string verify_result_json(const VerifyResult& r) {
  std::string s = "{\"name\":\"" + r.name + "\"";
  s += ",\"params\":{\"d\":" + std::to_string(r.params.d);
  s += ",\"T\":" + format_double(r.params.T);
  s += ",\"u\":" + format_double(r.params.u);
  s += ",\"N\":" + std::to_string(r.params.N);
  s += ",\"trials\":" + std::to_string(r.params.trials);
  s += ",\"seed\":" + std::to_string(r.params.seed) + "}";
  s += ",\"empirical\":" + format_double(r.empirical.mean);
  s += ",\"bound\":" + format_double(r.bound);
  s += ",\"stderr\":" + format_double(r.empirical.std_error);
  s += ",\"n\":" + std::to_string(r.qualifying);
  s += ",\"unresolved\":" + std::to_string(r.unresolved);
  if (r.name == "mf") {
    s += ",\"witnesses\":" + std::to_string(r.mf_witnesses);
    s += ",\"useful_violations\":" + std::to_string(r.mf_useful_violations);
  }
  if (r.name == "bad_return_max") s += ",\"max_loss\":" + std::to_string(r.max_loss);
  s += ",\"pass\":";
  s += r.pass ? "true" : "false";
  s += "}";
  return s;
}

SweepResult sweep(std::span<const double> u_grid, std::span<const double> T_grid,
                  std::uint32_t d, std::uint32_t level, std::uint64_t trials,
                  std::uint64_t seed, const TraceBudget& budget, int threads) {
  if (u_grid.empty() || T_grid.empty()) throw std::domain_error("grids must be nonempty");
  const auto start = std::chrono::steady_clock::now();
  SweepResult out;
  out.seed = seed;
  out.budget = budget;
  for (double u : u_grid) {
    for (double T : T_grid) {
      TreeShape shape{d, T, u, nullptr};
      Estimate est = estimate_escape(shape, level, trials, seed, budget, threads);
      out.points.push_back(SweepPoint{u, T, d, level, trials, est});
    }
  }
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string sweep_csv(const SweepResult& result) {
  std::string s = "u,T,d,level,trials,mean,stderr,ci_lo,ci_hi,truncated\n";
  for (const SweepPoint& p : result.points) {
    s += format_double(p.u) + "," + format_double(p.T) + "," + std::to_string(p.d) + "," +
         std::to_string(p.level) + "," + std::to_string(p.trials) + "," +
         format_double(p.estimate.mean) + "," + format_double(p.estimate.std_error) + "," +
         format_double(p.estimate.ci_lo) + "," + format_double(p.estimate.ci_hi) + "," +
         format_double(p.estimate.truncated_fraction) + "\n";
  }
  return s;
}

std::string sweep_json(const SweepResult& result) {
  std::string s = "{\"metadata\":{";
  s += "\"seed\":" + std::to_string(result.seed);
  s += ",\"max_crossings\":" + std::to_string(result.budget.max_crossings);
  s += ",\"max_depth\":" + std::to_string(result.budget.resolved_max_depth());
  s += ",\"wall_seconds\":" + format_double(result.wall_seconds);
  s += "},\"points\":[";
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const SweepPoint& p = result.points[i];
    if (i > 0) s += ",";
    s += "{\"u\":" + format_double(p.u);
    s += ",\"T\":" + format_double(p.T);
    s += ",\"d\":" + std::to_string(p.d);
    s += ",\"level\":" + std::to_string(p.level);
    s += ",\"trials\":" + std::to_string(p.trials);
    s += ",\"mean\":" + format_double(p.estimate.mean);
    s += ",\"stderr\":" + format_double(p.estimate.std_error);
    s += ",\"ci_lo\":" + format_double(p.estimate.ci_lo);
    s += ",\"ci_hi\":" + format_double(p.estimate.ci_hi);
    s += ",\"truncated\":" + format_double(p.estimate.truncated_fraction);
    s += "}";
  }
  s += "]}";
  return s;
}

}  // namespace cytrm
