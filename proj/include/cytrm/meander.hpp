#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cytrm/env.hpp"

namespace cytrm {

struct ParticleState {
  Vertex vertex;
  double height = 0.0;
  Direction direction = Direction::Up;
  double elapsed = 0.0;  // total vertical distance traveled
};

// Crossing produced by the pure single-step interface.
struct StepEvent {
  Bridge bridge;
  Vertex from;
  Vertex to;
  Direction direction_after;
  double at_elapsed;
};

// Advances to the next event: unit-speed cyclic travel to the nearest incident
// bridge endpoint strictly ahead, then an instantaneous jump (direction kept on
// a cross, reversed on a double bar). On a pole with no incident bridges the
// state after one full revolution is returned with no event.
std::pair<ParticleState, std::optional<StepEvent>> step(const ParticleState& state,
                                                        const TreeShape& shape,
                                                        std::uint64_t seed);

enum class RecordMode : std::uint8_t { Outcome, Full };

struct TraceBudget {
  std::uint64_t max_crossings = 1'000'000;
  std::uint32_t level_target = 0;  // 0 = no target
  std::uint32_t max_depth = 0;     // 0 = 10 * level_target, unlimited without a target

  std::uint32_t resolved_max_depth() const {
    if (max_depth > 0) return max_depth;
    if (level_target > 0) return 10 * level_target;
    return std::numeric_limits<std::uint32_t>::max();
  }
};

struct TraceOutcome {
  enum class Kind : std::uint8_t { Returned, ReachedLevel, BudgetExceeded };
  Kind kind = Kind::BudgetExceeded;
  double at_elapsed = 0.0;
  std::uint32_t level = 0;
  std::uint64_t crossings_used = 0;
};

// Elapsed time as (full revolutions, fractional part). While the motion stays
// phase-locked to cyclic ascent (always true at u = 1) the fractional part
// equals the particle height exactly, so elapsed mod T recovers the height
// with no rounding.
struct Odometer {
  std::int64_t wraps = 0;
  double frac = 0.0;

  void advance(Direction dir, double from_h, double to_h, bool wrapped, double T) {
    if (dir == Direction::Up && frac == from_h) {
      frac = to_h;
      if (wrapped) ++wraps;
      return;
    }
    double delta;
    if (to_h == from_h) {
      delta = T;  // full revolution back to the same endpoint
    } else if (dir == Direction::Up) {
      delta = wrapped ? T - from_h + to_h : to_h - from_h;
    } else {
      delta = wrapped ? from_h + T - to_h : from_h - to_h;
    }
    frac += delta;
    if (frac >= T) {
      frac -= T;
      ++wraps;
    }
  }

  double to_double(double T) const { return static_cast<double>(wraps) * T + frac; }
};

struct CrossingEvent {
  double time;    // elapsed at the crossing
  double height;  // bridge height; also the particle height on arrival
  VertexId from;
  VertexId to;
  VertexId edge_child;  // offspring endpoint of the crossed edge (canonical edge id)
  BridgeKind kind;
  Direction direction_after;
  std::int64_t wraps;  // odometer wraps at this crossing: time == wraps * T + odo_frac
  double odo_frac;
};

// Half-open visit interval in elapsed time; crossing instants belong to the
// destination vertex. closed == false means the trace ended mid-visit.
struct VisitInterval {
  double begin;
  double end;
  bool closed;
};

// One linear piece of a traversed pole section, with the travel direction.
struct DirectionSegment {
  VertexId vertex;
  double lo;
  double hi;
  Direction dir;
};

class TrajectoryRecord {
 public:
  TrajectoryRecord(LazyEnvironment env, RecordMode mode);

  RecordMode mode() const { return mode_; }
  const TreeShape& shape() const { return env_.shape(); }

  VertexId root() const { return 0; }
  VertexId parent(VertexId v) const { return env_.parent(v); }
  std::uint32_t depth(VertexId v) const { return env_.depth(v); }
  Vertex path_of(VertexId v) const { return env_.path_of(v); }
  std::string id_of(VertexId v) const { return env_.id_of(v); }
  std::size_t vertex_count() const { return env_.vertex_count(); }

  const ParticleState& start() const { return start_; }
  const ParticleState& final_state() const { return final_; }
  double horizon() const { return horizon_; }
  const TraceOutcome& outcome() const { return outcome_; }

  std::span<const CrossingEvent> crossings() const { return crossings_; }
  const std::vector<VisitInterval>& intervals(VertexId v) const;
  bool visited(VertexId v) const;
  double hitting_time(VertexId v) const;  // +inf when unvisited
  std::int64_t first_entry_crossing(VertexId v) const;
  VertexId vertex_at(double t) const;
  std::span<const DirectionSegment> segments() const { return segments_; }

  Bridge crossing_bridge(std::size_t i) const;

 private:
  friend std::pair<TraceOutcome, TrajectoryRecord> trace(const TreeShape&, std::uint64_t,
                                                         const TraceBudget&, RecordMode);

  void ensure_slot(VertexId v);
  void open_visit(VertexId v, double t, std::int64_t crossing_index);
  void close_visit(VertexId v, double t, bool closed);

  LazyEnvironment env_;
  RecordMode mode_;
  ParticleState start_;
  ParticleState final_;
  TraceOutcome outcome_;
  double horizon_ = 0.0;
  std::vector<CrossingEvent> crossings_;
  std::vector<std::vector<VisitInterval>> intervals_;
  std::vector<std::int64_t> first_entry_crossing_;
  std::vector<DirectionSegment> segments_;
};

// Runs from (root, 0, Up) until exact return to the start, the level target,
// or budget exhaustion. Deterministic in (shape, seed, budget).
std::pair<TraceOutcome, TrajectoryRecord> trace(const TreeShape& shape, std::uint64_t seed,
                                                const TraceBudget& budget,
                                                RecordMode mode = RecordMode::Full);

// True iff no two segments on the same pole with opposite directions overlap
// in an interval of positive length (shared endpoints are fine).
bool segments_conflict_free(std::span<const DirectionSegment> segments);

// True iff no pole point interior to two traversed segments of the same pole
// was swept in opposite directions. Requires a Full record.
bool check_no_direction_conflict(const TrajectoryRecord& record);

}  // namespace cytrm
