#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cytrm/meander.hpp"

namespace cytrm {

// A bridge that is useful at some time t: its edge was crossed exactly once,
// parent and offspring vertex were each visited once, the stay at the parent
// was shorter than T/2, and the particle has left the offspring vertex.
struct UsefulBridge {
  VertexId edge_child;  // offspring endpoint e-; the parent endpoint is parent(e-)
  double height;
  BridgeKind kind;
  std::int64_t entry_crossing;  // index of the crossing that first entered e-
};

struct UsefulBridgeSet {
  double as_of = 0.0;
  std::vector<UsefulBridge> members;  // ordered by entry_crossing

  bool contains(VertexId edge_child) const;
  std::size_t size() const { return members.size(); }
};

// Membership is evaluated with visit entries strictly before t counting and
// exits at or before t counting: an exit exactly at t completes a visit, an
// entry exactly at t is not yet a visit. This is the reading under which both
// the move-forward count (>= N-2 at completion) and the bad-return bound
// (<= 2 losses up to the grandparent hit) hold simultaneously.
UsefulBridgeSet useful_bridges_at(const TrajectoryRecord& record, double t);

// True iff the vertex occupied at t had never been visited before t.
bool is_frontier_time(const TrajectoryRecord& record, double t);

// After the first return to e- at or after t, the elapsed time of the jump
// that leaves {e+, e-} (possibly via e+ first), when it lands on a vertex
// never visited before; nullopt otherwise or when the record ends unresolved.
std::optional<double> detect_frontier_departure(const TrajectoryRecord& record,
                                                VertexId edge_child, double t);

struct MFWitness {
  double start_elapsed;
  std::vector<std::size_t> crossing_indices;  // the N consecutive forward crossings
  double completion;
};

// Witness that the next N crossings after the frontier time all move one step
// further from the starting vertex, within an elapsed window of length T.
std::optional<MFWitness> detect_mf(const TrajectoryRecord& record, double start_frontier_time,
                                   int N);

// Frontier departure followed by a move-forward witness started at it.
bool classify_acceptable_return(const TrajectoryRecord& record, VertexId edge_child, double t,
                                int N);

// |useful_bridges_at(t) \ useful_bridges_at(t')| counted per edge.
int bad_return_loss(const TrajectoryRecord& record, double t, double t_prime);

struct GoodnessReport {
  Vertex vertex;
  bool good = false;
  bool uncovered = false;
};

// good: the parent edge supports exactly one bridge. uncovered: additionally
// the parent is good and no sibling's bridges cyclically separate the parent
// bridge from the grandparent bridge on the parent's pole. Vertices whose
// parent is the root are excluded (no grandparent bridge exists).
GoodnessReport classify_vertex(const TreeShape& shape, std::uint64_t seed, const Vertex& vertex);

// Incremental (online) useful-bridge bookkeeping over a finished record.
// Each crossing is processed in two phases so that the state between them is
// exactly useful_bridges_at evaluated at that crossing instant.
class UsefulBridgeTracker {
 public:
  explicit UsefulBridgeTracker(const TrajectoryRecord& record);

  void process_exit(std::size_t crossing_index);
  void process_entry(std::size_t crossing_index);

  bool contains(VertexId edge_child) const { return members_.count(edge_child) > 0; }
  std::size_t size() const { return members_.size(); }

  // Member with the latest entry crossing; optionally restricted to bridges
  // whose parent endpoint is not the root.
  std::optional<UsefulBridge> last_crossed(bool require_nonroot_parent);

  std::vector<VertexId> edge_snapshot() const;  // sorted edge ids

  // Members are numbered in insertion order; the death log lists the numbers
  // of erased members. |U_t \ U_t'| is the count of deaths logged between the
  // two instants with number below the insertion count at t.
  std::size_t insertion_count() const { return total_inserted_; }
  const std::vector<std::size_t>& death_log() const { return deaths_; }

 private:
  void erase_member(VertexId v);

  const TrajectoryRecord& rec_;
  std::unordered_map<VertexId, UsefulBridge> members_;
  std::unordered_map<VertexId, std::size_t> order_of_;
  std::vector<VertexId> insertion_order_;  // entry order; dead suffix pruned lazily
  std::vector<std::size_t> deaths_;
  std::size_t total_inserted_ = 0;
  std::vector<std::uint32_t> entries_seen_;
  std::vector<std::uint32_t> exits_seen_;
};

}  // namespace cytrm
