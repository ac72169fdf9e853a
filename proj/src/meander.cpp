#include "cytrm/meander.hpp"

#include <algorithm>
#include <stdexcept>

namespace cytrm {

std::pair<ParticleState, std::optional<StepEvent>> step(const ParticleState& state,
                                                        const TreeShape& shape,
                                                        std::uint64_t seed) {
  auto next = next_bridge_on_pole(state.vertex, state.height, state.direction, shape, seed);
  if (!next) {
    ParticleState after = state;
    after.elapsed += shape.T;  // one full revolution, no event
    return {after, std::nullopt};
  }
  ParticleState after;
  after.vertex = next->arrival;
  after.height = next->bridge.height;
  after.direction = next->bridge.kind == BridgeKind::Cross ? state.direction
                                                           : flipped(state.direction);
  after.elapsed = state.elapsed + next->distance;
  StepEvent ev{next->bridge, state.vertex, next->arrival, after.direction, after.elapsed};
  return {after, ev};
}

TrajectoryRecord::TrajectoryRecord(LazyEnvironment env, RecordMode mode)
    : env_(std::move(env)), mode_(mode) {}

void TrajectoryRecord::ensure_slot(VertexId v) {
  if (intervals_.size() <= static_cast<std::size_t>(v)) {
    intervals_.resize(v + 1);
    first_entry_crossing_.resize(v + 1, -1);
  }
}

void TrajectoryRecord::open_visit(VertexId v, double t, std::int64_t crossing_index) {
  ensure_slot(v);
  if (intervals_[v].empty()) first_entry_crossing_[v] = crossing_index;
  intervals_[v].push_back(VisitInterval{t, t, false});
}

void TrajectoryRecord::close_visit(VertexId v, double t, bool closed) {
  auto& iv = intervals_[v].back();
  iv.end = t;
  iv.closed = closed;
}

const std::vector<VisitInterval>& TrajectoryRecord::intervals(VertexId v) const {
  static const std::vector<VisitInterval> empty;
  if (static_cast<std::size_t>(v) >= intervals_.size()) return empty;
  return intervals_[v];
}

bool TrajectoryRecord::visited(VertexId v) const { return !intervals(v).empty(); }

double TrajectoryRecord::hitting_time(VertexId v) const {
  const auto& iv = intervals(v);
  return iv.empty() ? std::numeric_limits<double>::infinity() : iv.front().begin;
}

std::int64_t TrajectoryRecord::first_entry_crossing(VertexId v) const {
  if (static_cast<std::size_t>(v) >= first_entry_crossing_.size()) return -1;
  return first_entry_crossing_[v];
}

VertexId TrajectoryRecord::vertex_at(double t) const {
  if (t < 0.0 || t > horizon_) throw std::domain_error("time outside the simulated horizon");
  auto it = std::upper_bound(crossings_.begin(), crossings_.end(), t,
                             [](double x, const CrossingEvent& c) { return x < c.time; });
  if (it == crossings_.begin()) return root();
  return (it - 1)->to;
}

Bridge TrajectoryRecord::crossing_bridge(std::size_t i) const {
  const CrossingEvent& c = crossings_[i];
  return Bridge{path_of(parent(c.edge_child)), env_.index_in_parent(c.edge_child), c.height,
                c.kind};
}

namespace {

void push_segments(std::vector<DirectionSegment>& out, VertexId v, double from_h, double to_h,
                   Direction dir, bool wrapped, double T) {
  if (dir == Direction::Up) {
    if (!wrapped) {
      out.push_back({v, from_h, to_h, dir});
    } else {
      out.push_back({v, from_h, T, dir});
      if (to_h > 0.0) out.push_back({v, 0.0, to_h, dir});
    }
  } else {
    if (!wrapped) {
      out.push_back({v, to_h, from_h, dir});
    } else {
      out.push_back({v, 0.0, from_h, dir});
      if (to_h < T) out.push_back({v, to_h, T, dir});
    }
  }
}

}  // namespace

std::pair<TraceOutcome, TrajectoryRecord> trace(const TreeShape& shape, std::uint64_t seed,
                                                const TraceBudget& budget, RecordMode mode) {
  if (budget.max_crossings == 0) throw std::domain_error("budget must be positive");
  const double T = shape.T;
  const std::uint32_t depth_cap = budget.resolved_max_depth();
  const bool full = mode == RecordMode::Full;

  TrajectoryRecord rec(LazyEnvironment(shape, seed), mode);
  LazyEnvironment& env = rec.env_;

  VertexId at = env.root();
  double height = 0.0;
  Direction dir = Direction::Up;
  Odometer odo;
  std::uint64_t crossings_used = 0;

  rec.start_ = ParticleState{Vertex::root(), 0.0, Direction::Up, 0.0};
  if (full) rec.open_visit(at, 0.0, -1);

  TraceOutcome outcome;
  for (;;) {
    auto hit = env.next_hit(at, height, dir);

    if (at == env.root() && dir == Direction::Up) {
      const double wrap_dist = T - height;
      if (!hit || hit->distance >= wrap_dist) {
        // The upward sweep passes through the exact start point (root, 0).
        odo.advance(dir, height, 0.0, true, T);
        const double t = odo.to_double(T);
        if (full) {
          push_segments(rec.segments_, at, height, 0.0, dir, true, T);
          rec.close_visit(at, t, false);
        }
        outcome = {TraceOutcome::Kind::Returned, t, 0, crossings_used};
        rec.final_ = ParticleState{Vertex::root(), 0.0, Direction::Up, t};
        rec.horizon_ = t;
        break;
      }
    }
    if (!hit) {
      // A bridge-free pole is only reachable as the start pole (arrival at any
      // other pole implies an incident bridge), and that case returned above.
      throw std::logic_error("revolution on a non-start pole");
    }
    if (crossings_used >= budget.max_crossings) {
      const double t = odo.to_double(T);
      if (full) rec.close_visit(at, t, false);
      outcome = {TraceOutcome::Kind::BudgetExceeded, t, env.depth(at), crossings_used};
      rec.final_ = ParticleState{env.path_of(at), height, dir, t};
      rec.horizon_ = t;
      break;
    }

    const double to_h = hit->endpoint.height;
    const bool wrapped = dir == Direction::Up ? to_h <= height : to_h >= height;
    odo.advance(dir, height, to_h, wrapped, T);
    const double t = odo.to_double(T);

    const VertexId to = hit->endpoint.neighbor < 0
                            ? env.parent(at)
                            : env.child(at, static_cast<std::uint32_t>(hit->endpoint.neighbor));
    const VertexId edge_child = hit->endpoint.neighbor < 0 ? at : to;
    const Direction dir_after =
        hit->endpoint.kind == BridgeKind::Cross ? dir : flipped(dir);

    if (full) {
      push_segments(rec.segments_, at, height, to_h, dir, wrapped, T);
      rec.crossings_.push_back(CrossingEvent{t, to_h, at, to, edge_child, hit->endpoint.kind,
                                             dir_after, odo.wraps, odo.frac});
      rec.close_visit(at, t, true);
      rec.open_visit(to, t, static_cast<std::int64_t>(rec.crossings_.size()) - 1);
    }
    ++crossings_used;
    at = to;
    height = to_h;
    dir = dir_after;

    const std::uint32_t d = env.depth(at);
    if (budget.level_target > 0 && d == budget.level_target) {
      if (full) rec.close_visit(at, t, false);
      outcome = {TraceOutcome::Kind::ReachedLevel, t, d, crossings_used};
      rec.final_ = ParticleState{env.path_of(at), height, dir, t};
      rec.horizon_ = t;
      break;
    }
    if (d > depth_cap) {
      if (full) rec.close_visit(at, t, false);
      outcome = {TraceOutcome::Kind::BudgetExceeded, t, d, crossings_used};
      rec.final_ = ParticleState{env.path_of(at), height, dir, t};
      rec.horizon_ = t;
      break;
    }
  }
  rec.outcome_ = outcome;
  return {outcome, std::move(rec)};
}

bool segments_conflict_free(std::span<const DirectionSegment> segs) {
  std::vector<DirectionSegment> sorted(segs.begin(), segs.end());
  std::sort(sorted.begin(), sorted.end(), [](const DirectionSegment& a, const DirectionSegment& b) {
    if (a.vertex != b.vertex) return a.vertex < b.vertex;
    return a.lo < b.lo;
  });
  std::size_t i = 0;
  std::vector<std::pair<double, double>> up, down;
  while (i < sorted.size()) {
    const VertexId v = sorted[i].vertex;
    up.clear();
    down.clear();
    for (; i < sorted.size() && sorted[i].vertex == v; ++i) {
      auto& side = sorted[i].dir == Direction::Up ? up : down;
      side.emplace_back(sorted[i].lo, sorted[i].hi);
    }
    // both lists are lo-sorted; look for a strict interior overlap
    std::size_t a = 0, b = 0;
    while (a < up.size() && b < down.size()) {
      const auto& [ul, uh] = up[a];
      const auto& [dl, dh] = down[b];
      if (std::max(ul, dl) < std::min(uh, dh)) return false;
      if (uh < dh) {
        ++a;
      } else {
        ++b;
      }
    }
  }
  return true;
}

bool check_no_direction_conflict(const TrajectoryRecord& record) {
  if (record.mode() != RecordMode::Full) {
    throw std::invalid_argument("direction-conflict check requires a full record");
  }
  return segments_conflict_free(record.segments());
}

}  // namespace cytrm
