#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cytrm/rng.hpp"

namespace cytrm {

enum class BridgeKind : std::uint8_t { Cross, DoubleBar };
enum class Direction : std::uint8_t { Up, Down };

inline Direction flipped(Direction d) {
  return d == Direction::Up ? Direction::Down : Direction::Up;
}

// Tree vertex as the path of child indices from the root. The root is the
// empty path. This is also the canonical edge id: an edge is named by its
// offspring vertex, serialized as decimal indices joined by '/'.
struct Vertex {
  std::vector<std::uint32_t> path;

  static Vertex root() { return Vertex{}; }
  bool is_root() const { return path.empty(); }
  std::uint32_t depth() const { return static_cast<std::uint32_t>(path.size()); }
  Vertex parent() const;
  Vertex child(std::uint32_t index) const;
  std::string id() const;

  bool operator==(const Vertex&) const = default;
};

// Shape of the environment: offspring counts, pole height T, cross probability u.
// offspring_by_depth overrides the constant d when set (depth 0 = root).
struct TreeShape {
  std::uint32_t d = 2;
  double T = 1.0;
  double u = 1.0;
  std::function<std::uint32_t(std::uint32_t)> offspring_by_depth;

  std::uint32_t offspring(std::uint32_t depth) const {
    return offspring_by_depth ? offspring_by_depth(depth) : d;
  }
  void validate() const;  // throws std::domain_error on bad parameters
};

struct Bridge {
  Vertex parent;  // e+, the endpoint closer to the root
  std::uint32_t child_index = 0;
  double height = 0.0;
  BridgeKind kind = BridgeKind::Cross;

  Vertex child() const { return parent.child(child_index); }
};

// Bridges of one edge, sorted strictly increasing by height. Exact ties
// (possible only through rounding) are broken by one-ulp bumps.
struct EdgeBridgeList {
  std::vector<double> heights;
  std::vector<BridgeKind> kinds;

  std::size_t size() const { return heights.size(); }
  bool empty() const { return heights.empty(); }
};

// Deterministic function of (seed, canonical edge id): the same pair yields
// bit-identical output regardless of query order. Count ~ Poisson(T), heights
// i.i.d. uniform on [0,T) then sorted, kinds i.i.d. Bernoulli(u) for Cross.
EdgeBridgeList edge_bridges(const Vertex& parent, std::uint32_t child_index,
                            const TreeShape& shape, std::uint64_t seed);

// One bridge endpoint on a pole, in the merged view over all incident edges.
// neighbor == -1 means the edge to the parent, otherwise a child index.
struct PoleEndpoint {
  double height;
  std::int32_t neighbor;
  BridgeKind kind;
};

// Cyclically next endpoint strictly ahead of from_height in the given
// direction; endpoints must be sorted ascending by height. Ties in cyclic
// distance resolve to the earlier list entry. Returns nullptr on an empty pole.
const PoleEndpoint* next_endpoint(std::span<const PoleEndpoint> pole,
                                  double from_height, Direction dir);

// Cyclic distance traveled from from_height to the endpoint, in (0, T].
double cyclic_distance(double from_height, double to_height, Direction dir, double T);

struct NextBridge {
  Bridge bridge;
  Vertex arrival;   // the vertex on the far side of the bridge
  double distance;  // vertical distance traveled before the jump
};

// Scans all bridges incident to the vertex (parent edge and every child edge),
// including cyclic wrap across the T/0 boundary. Empty iff the pole has no
// incident bridges at all.
std::optional<NextBridge> next_bridge_on_pole(const Vertex& vertex, double from_height,
                                              Direction dir, const TreeShape& shape,
                                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trial-local environment with interned vertices and memoized poles. Purely an
// optimization over the free functions above: correctness never depends on the
// cache because every edge list is a pure function of (seed, edge).
// ---------------------------------------------------------------------------

using VertexId = std::int32_t;
inline constexpr VertexId kNoVertex = -1;

class LazyEnvironment {
 public:
  LazyEnvironment(TreeShape shape, std::uint64_t seed);

  const TreeShape& shape() const { return shape_; }
  std::uint64_t seed() const { return seed_; }

  VertexId root() const { return 0; }
  VertexId parent(VertexId v) const { return nodes_[v].parent; }
  std::uint32_t depth(VertexId v) const { return nodes_[v].depth; }
  std::uint32_t index_in_parent(VertexId v) const { return nodes_[v].child_index; }
  std::size_t vertex_count() const { return nodes_.size(); }

  // Interns the child on first use.
  VertexId child(VertexId v, std::uint32_t index);

  // Merged sorted endpoints of the vertex's pole, built on first use.
  const std::vector<PoleEndpoint>& pole(VertexId v);

  struct Hit {
    PoleEndpoint endpoint;
    double distance;
  };
  std::optional<Hit> next_hit(VertexId v, double from_height, Direction dir);

  Vertex path_of(VertexId v) const;
  std::string id_of(VertexId v) const { return path_of(v).id(); }

 private:
  struct Node {
    VertexId parent;
    std::uint32_t child_index;
    std::uint32_t depth;
    std::uint64_t key;
    bool pole_built = false;
    std::vector<PoleEndpoint> pole;
    std::vector<VertexId> children;  // sized on first child intern, kNoVertex = not yet
  };

  TreeShape shape_;
  std::uint64_t seed_;
  std::vector<Node> nodes_;
};

}  // namespace cytrm
