#include "cytrm/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cytrm {

Vertex Vertex::parent() const {
  if (is_root()) throw std::domain_error("root vertex has no parent");
  Vertex p{path};
  p.path.pop_back();
  return p;
}

Vertex Vertex::child(std::uint32_t index) const {
  Vertex c{path};
  c.path.push_back(index);
  return c;
}

std::string Vertex::id() const {
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) out += '/';
    out += std::to_string(path[i]);
  }
  return out;
}

void TreeShape::validate() const {
  if (!(T > 0.0)) throw std::domain_error("pole height T must be positive");
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("cross probability u must lie in [0,1]");
  if (offspring(0) < 1) throw std::domain_error("offspring count must be at least 1");
}

namespace {

std::uint64_t vertex_key(std::uint64_t seed, const Vertex& v) {
  std::uint64_t k = seed;
  for (std::uint32_t idx : v.path) k = derive_key(k, idx);
  return k;
}

// Sorted strictly-increasing heights; exact post-rounding ties are resolved by
// one-ulp bumps, which leaves the statistics unchanged.
void sort_and_break_ties(std::vector<double>& heights, std::vector<BridgeKind>& kinds,
                         double T) {
  const std::size_t n = heights.size();
  if (n < 2) return;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return heights[a] < heights[b]; });
  std::vector<double> h(n);
  std::vector<BridgeKind> k(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = heights[order[i]];
    k[i] = kinds[order[i]];
  }
  for (std::size_t i = 1; i < n; ++i) {
    while (h[i] <= h[i - 1]) {
      h[i] = std::nextafter(h[i], std::numeric_limits<double>::infinity());
    }
  }
  if (h.back() >= T) {
    h.back() = std::nextafter(T, 0.0);
    for (std::size_t i = n - 1; i > 0; --i) {
      while (h[i - 1] >= h[i]) h[i - 1] = std::nextafter(h[i - 1], -1.0);
    }
  }
  heights = std::move(h);
  kinds = std::move(k);
}

EdgeBridgeList sample_edge(std::uint64_t edge_key, const TreeShape& shape) {
  SplitMix64 stream(derive_key(edge_key, kEdgeStreamSalt));
  const unsigned n = stream.next_poisson(shape.T);
  EdgeBridgeList list;
  list.heights.reserve(n);
  list.kinds.reserve(n);
  for (unsigned i = 0; i < n; ++i) list.heights.push_back(stream.next_unit() * shape.T);
  for (unsigned i = 0; i < n; ++i) {
    list.kinds.push_back(stream.next_bernoulli(shape.u) ? BridgeKind::Cross
                                                        : BridgeKind::DoubleBar);
  }
  sort_and_break_ties(list.heights, list.kinds, shape.T);
  return list;
}

void append_edge(std::vector<PoleEndpoint>& pole, const EdgeBridgeList& list,
                 std::int32_t neighbor) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    pole.push_back(PoleEndpoint{list.heights[i], neighbor, list.kinds[i]});
  }
}

void sort_pole(std::vector<PoleEndpoint>& pole) {
  std::sort(pole.begin(), pole.end(), [](const PoleEndpoint& a, const PoleEndpoint& b) {
    if (a.height != b.height) return a.height < b.height;
    return a.neighbor < b.neighbor;  // parent (-1) before children; ties are measure zero
  });
}

}  // namespace

EdgeBridgeList edge_bridges(const Vertex& parent, std::uint32_t child_index,
                            const TreeShape& shape, std::uint64_t seed) {
  shape.validate();
  if (child_index >= shape.offspring(parent.depth())) {
    throw std::domain_error("child index out of range for this vertex");
  }
  return sample_edge(derive_key(vertex_key(seed, parent), child_index), shape);
}

double cyclic_distance(double from_height, double to_height, Direction dir, double T) {
  if (to_height == from_height) return T;  // the same endpoint, one full revolution
  if (dir == Direction::Up) {
    return to_height > from_height ? to_height - from_height : T - from_height + to_height;
  }
  return to_height < from_height ? from_height - to_height : from_height + T - to_height;
}

const PoleEndpoint* next_endpoint(std::span<const PoleEndpoint> pole, double from_height,
                                  Direction dir) {
  if (pole.empty()) return nullptr;
  if (dir == Direction::Up) {
    auto it = std::upper_bound(pole.begin(), pole.end(), from_height,
                               [](double h, const PoleEndpoint& e) { return h < e.height; });
    if (it == pole.end()) it = pole.begin();  // wrap through T -> 0
    return &*it;
  }
  auto it = std::lower_bound(pole.begin(), pole.end(), from_height,
                             [](const PoleEndpoint& e, double h) { return e.height < h; });
  if (it == pole.begin()) it = pole.end();  // wrap through 0 -> T
  return &*(it - 1);
}

std::optional<NextBridge> next_bridge_on_pole(const Vertex& vertex, double from_height,
                                              Direction dir, const TreeShape& shape,
                                              std::uint64_t seed) {
  shape.validate();
  if (!(from_height >= 0.0 && from_height < shape.T)) {
    throw std::domain_error("from_height must lie in [0, T)");
  }
  std::vector<PoleEndpoint> pole;
  if (!vertex.is_root()) {
    append_edge(pole, edge_bridges(vertex.parent(), vertex.path.back(), shape, seed), -1);
  }
  const std::uint32_t n = shape.offspring(vertex.depth());
  for (std::uint32_t c = 0; c < n; ++c) {
    append_edge(pole, edge_bridges(vertex, c, shape, seed), static_cast<std::int32_t>(c));
  }
  sort_pole(pole);
  const PoleEndpoint* hit = next_endpoint(pole, from_height, dir);
  if (hit == nullptr) return std::nullopt;

  NextBridge out;
  out.distance = cyclic_distance(from_height, hit->height, dir, shape.T);
  if (hit->neighbor < 0) {
    out.bridge = Bridge{vertex.parent(), vertex.path.back(), hit->height, hit->kind};
    out.arrival = vertex.parent();
  } else {
    const auto c = static_cast<std::uint32_t>(hit->neighbor);
    out.bridge = Bridge{vertex, c, hit->height, hit->kind};
    out.arrival = vertex.child(c);
  }
  return out;
}

LazyEnvironment::LazyEnvironment(TreeShape shape, std::uint64_t seed)
    : shape_(std::move(shape)), seed_(seed) {
  shape_.validate();
  nodes_.push_back(Node{kNoVertex, 0, 0, seed_, false, {}, {}});
}

VertexId LazyEnvironment::child(VertexId v, std::uint32_t index) {
  Node& node = nodes_[v];
  if (node.children.empty()) {
    node.children.assign(shape_.offspring(node.depth), kNoVertex);
  }
  if (node.children[index] == kNoVertex) {
    const auto id = static_cast<VertexId>(nodes_.size());
    node.children[index] = id;
    nodes_.push_back(Node{v, index, node.depth + 1, derive_key(node.key, index), false, {}, {}});
    return id;
  }
  return node.children[index];
}

const std::vector<PoleEndpoint>& LazyEnvironment::pole(VertexId v) {
  Node& node = nodes_[v];
  if (!node.pole_built) {
    std::vector<PoleEndpoint> pole;
    if (node.parent != kNoVertex) {
      append_edge(pole, sample_edge(node.key, shape_), -1);
    }
    const std::uint32_t n = shape_.offspring(node.depth);
    for (std::uint32_t c = 0; c < n; ++c) {
      append_edge(pole, sample_edge(derive_key(node.key, c), shape_),
                  static_cast<std::int32_t>(c));
    }
    sort_pole(pole);
    node.pole = std::move(pole);
    node.pole_built = true;
  }
  return node.pole;
}

std::optional<LazyEnvironment::Hit> LazyEnvironment::next_hit(VertexId v, double from_height,
                                                              Direction dir) {
  const auto& p = pole(v);
  const PoleEndpoint* hit = next_endpoint(p, from_height, dir);
  if (hit == nullptr) return std::nullopt;
  return Hit{*hit, cyclic_distance(from_height, hit->height, dir, shape_.T)};
}

Vertex LazyEnvironment::path_of(VertexId v) const {
  std::vector<std::uint32_t> rev;
  for (VertexId cur = v; cur != 0; cur = nodes_[cur].parent) {
    rev.push_back(nodes_[cur].child_index);
  }
  Vertex out;
  out.path.assign(rev.rbegin(), rev.rend());
  return out;
}

}  // namespace cytrm
