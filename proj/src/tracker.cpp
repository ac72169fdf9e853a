#include "cytrm/tracker.hpp"

#include <algorithm>
#include <stdexcept>

namespace cytrm {

bool UsefulBridgeSet::contains(VertexId edge_child) const {
  return std::any_of(members.begin(), members.end(),
                     [&](const UsefulBridge& m) { return m.edge_child == edge_child; });
}

namespace {

// Visit intervals of v that started strictly before t.
std::size_t relevant_count(const std::vector<VisitInterval>& iv, double t) {
  std::size_t n = 0;
  while (n < iv.size() && iv[n].begin < t) ++n;
  return n;
}

bool is_useful(const TrajectoryRecord& rec, VertexId v, double t) {
  if (v == rec.root()) return false;
  const auto& iv = rec.intervals(v);
  if (relevant_count(iv, t) != 1) return false;
  if (!iv[0].closed || iv[0].end > t) return false;  // must have left e- by t

  const VertexId p = rec.parent(v);
  const auto& pv = rec.intervals(p);
  if (relevant_count(pv, t) != 1) return false;
  if (!pv[0].closed || pv[0].end != iv[0].begin) return false;  // single stay, exited to v

  return iv[0].begin - pv[0].begin < rec.shape().T / 2.0;
}

UsefulBridge make_member(const TrajectoryRecord& rec, VertexId v) {
  const std::int64_t idx = rec.first_entry_crossing(v);
  const CrossingEvent& c = rec.crossings()[idx];
  return UsefulBridge{v, c.height, c.kind, idx};
}

}  // namespace

UsefulBridgeSet useful_bridges_at(const TrajectoryRecord& record, double t) {
  if (record.mode() != RecordMode::Full) {
    throw std::invalid_argument("useful-bridge queries require a full record");
  }
  if (t < 0.0 || t > record.horizon()) {
    throw std::domain_error("time outside the simulated horizon");
  }
  UsefulBridgeSet out;
  out.as_of = t;
  const auto n = static_cast<VertexId>(record.vertex_count());
  for (VertexId v = 1; v < n; ++v) {
    if (is_useful(record, v, t)) out.members.push_back(make_member(record, v));
  }
  std::sort(out.members.begin(), out.members.end(),
            [](const UsefulBridge& a, const UsefulBridge& b) {
              return a.entry_crossing < b.entry_crossing;
            });
  return out;
}

bool is_frontier_time(const TrajectoryRecord& record, double t) {
  return record.hitting_time(record.vertex_at(t)) == t;
}

std::optional<double> detect_frontier_departure(const TrajectoryRecord& record,
                                                VertexId edge_child, double t) {
  if (!is_useful(record, edge_child, t)) {
    throw std::domain_error("bridge is not useful at the given time");
  }
  const VertexId e_minus = edge_child;
  const VertexId e_plus = record.parent(edge_child);
  auto crossings = record.crossings();

  auto it = std::lower_bound(crossings.begin(), crossings.end(), t,
                             [](const CrossingEvent& c, double x) { return c.time < x; });
  std::size_t i = static_cast<std::size_t>(it - crossings.begin());
  while (i < crossings.size() && crossings[i].to != e_minus) ++i;
  if (i == crossings.size()) {
    throw std::domain_error("no return to the offspring vertex in the record");
  }
  for (std::size_t j = i + 1; j < crossings.size(); ++j) {
    const VertexId w = crossings[j].to;
    if (w == e_minus || w == e_plus) continue;
    if (record.first_entry_crossing(w) == static_cast<std::int64_t>(j)) {
      return crossings[j].time;
    }
    return std::nullopt;
  }
  return std::nullopt;  // record ended before the particle left {e+, e-}
}

std::optional<MFWitness> detect_mf(const TrajectoryRecord& record, double start_frontier_time,
                                   int N) {
  if (N < 0) throw std::domain_error("N must be nonnegative");
  if (!is_frontier_time(record, start_frontier_time)) {
    throw std::domain_error("start time is not a frontier time");
  }
  MFWitness w;
  w.start_elapsed = start_frontier_time;
  w.completion = start_frontier_time;
  if (N == 0) return w;

  auto crossings = record.crossings();
  auto it = std::upper_bound(crossings.begin(), crossings.end(), start_frontier_time,
                             [](double x, const CrossingEvent& c) { return x < c.time; });
  std::size_t j = static_cast<std::size_t>(it - crossings.begin());
  const double deadline = start_frontier_time + record.shape().T;
  for (int k = 0; k < N; ++k, ++j) {
    if (j >= crossings.size()) return std::nullopt;
    const CrossingEvent& c = crossings[j];
    if (c.time >= deadline) return std::nullopt;
    if (record.parent(c.to) != c.from) return std::nullopt;  // not a forward step
    w.crossing_indices.push_back(j);
  }
  w.completion = crossings[w.crossing_indices.back()].time;
  return w;
}

bool classify_acceptable_return(const TrajectoryRecord& record, VertexId edge_child, double t,
                                int N) {
  auto departure = detect_frontier_departure(record, edge_child, t);
  if (!departure) return false;
  return detect_mf(record, *departure, N).has_value();
}

int bad_return_loss(const TrajectoryRecord& record, double t, double t_prime) {
  if (t > t_prime) throw std::domain_error("bad_return_loss needs t <= t'");
  const UsefulBridgeSet before = useful_bridges_at(record, t);
  const UsefulBridgeSet after = useful_bridges_at(record, t_prime);
  int lost = 0;
  for (const UsefulBridge& m : before.members) {
    if (!after.contains(m.edge_child)) ++lost;
  }
  return lost;
}

GoodnessReport classify_vertex(const TreeShape& shape, std::uint64_t seed, const Vertex& vertex) {
  if (vertex.is_root()) throw std::domain_error("cannot classify the root");
  const Vertex parent = vertex.parent();
  if (parent.is_root()) {
    throw std::domain_error("classification needs a grandparent bridge; parent is the root");
  }
  GoodnessReport report;
  report.vertex = vertex;

  const EdgeBridgeList own = edge_bridges(parent, vertex.path.back(), shape, seed);
  report.good = own.size() == 1;
  if (!report.good) return report;

  const EdgeBridgeList up = edge_bridges(parent.parent(), parent.path.back(), shape, seed);
  if (up.size() != 1) return report;  // parent not good; uncovered undefined -> false

  const double lo = std::min(own.heights[0], up.heights[0]);
  const double hi = std::max(own.heights[0], up.heights[0]);
  const std::uint32_t siblings = shape.offspring(parent.depth());
  for (std::uint32_t s = 0; s < siblings; ++s) {
    if (s == vertex.path.back()) continue;
    const EdgeBridgeList other = edge_bridges(parent, s, shape, seed);
    bool inside = false;
    bool outside = false;
    for (double h : other.heights) {
      if (h > lo && h < hi) inside = true;
      if (h < lo || h > hi) outside = true;
    }
    if (inside && outside) return report;  // covered by this sibling
  }
  report.uncovered = true;
  return report;
}

UsefulBridgeTracker::UsefulBridgeTracker(const TrajectoryRecord& record)
    : rec_(record),
      entries_seen_(record.vertex_count(), 0),
      exits_seen_(record.vertex_count(), 0) {
  if (record.mode() != RecordMode::Full) {
    throw std::invalid_argument("useful-bridge tracking requires a full record");
  }
  entries_seen_[rec_.root()] = 1;  // the start counts as the root's first entry
}

void UsefulBridgeTracker::process_exit(std::size_t crossing_index) {
  const CrossingEvent& c = rec_.crossings()[crossing_index];
  const VertexId z = c.from;
  if (exits_seen_[z]++ != 0) return;  // only the first exit can create a member
  if (z == rec_.root()) return;
  const VertexId p = rec_.parent(z);
  if (entries_seen_[p] != 1) return;
  const double stay = rec_.hitting_time(z) - rec_.hitting_time(p);
  if (!(stay < rec_.shape().T / 2.0)) return;
  const std::int64_t entry = rec_.first_entry_crossing(z);
  const CrossingEvent& ce = rec_.crossings()[entry];
  members_.emplace(z, UsefulBridge{z, ce.height, ce.kind, entry});
  order_of_.emplace(z, total_inserted_++);
  insertion_order_.push_back(z);  // first exits come in entry order
}

void UsefulBridgeTracker::process_entry(std::size_t crossing_index) {
  const CrossingEvent& c = rec_.crossings()[crossing_index];
  const VertexId w = c.to;
  if (++entries_seen_[w] != 2) return;
  erase_member(w);  // the offspring vertex was revisited
  // w can also be the parent endpoint of one member: the edge to the child it
  // first exited to.
  const std::int64_t exit_crossing = rec_.intervals(w)[0].closed
                                         ? rec_.first_entry_crossing(w) + 1
                                         : -1;
  if (exit_crossing >= 0) {
    const VertexId first_exit_dest = rec_.crossings()[exit_crossing].to;
    if (rec_.parent(first_exit_dest) == w) erase_member(first_exit_dest);
  }
}

void UsefulBridgeTracker::erase_member(VertexId v) {
  auto it = members_.find(v);
  if (it == members_.end()) return;
  members_.erase(it);
  auto ord = order_of_.find(v);
  deaths_.push_back(ord->second);
  order_of_.erase(ord);
}

std::optional<UsefulBridge> UsefulBridgeTracker::last_crossed(bool require_nonroot_parent) {
  while (!insertion_order_.empty() && members_.count(insertion_order_.back()) == 0) {
    insertion_order_.pop_back();
  }
  for (auto it = insertion_order_.rbegin(); it != insertion_order_.rend(); ++it) {
    auto found = members_.find(*it);
    if (found == members_.end()) continue;
    if (require_nonroot_parent && rec_.parent(*it) == rec_.root()) continue;
    return found->second;
  }
  return std::nullopt;
}

std::vector<VertexId> UsefulBridgeTracker::edge_snapshot() const {
  std::vector<VertexId> out;
  out.reserve(members_.size());
  for (const auto& [v, m] : members_) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cytrm
