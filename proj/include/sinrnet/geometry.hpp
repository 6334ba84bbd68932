#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

#include "sinrnet/common.hpp"

namespace sinrnet {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double dist(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct Ball {
  Point center;
  double radius = 0.0;
  bool contains(const Point& p) const { return dist(center, p) <= radius; }
};

struct PlacedNode {
  NodeId id = -1;
  Point pos;
};

// Deterministic upper bound on the packing number: the largest set of
// points inside a ball of radius r1 with pairwise distances >= r2 has at
// most floor((2*r1/r2 + 1)^2) elements (each point owns a disjoint disk of
// radius r2/2 inside a disk of radius r1 + r2/2). Saturates at 2^53 for
// extreme ratios; callers only compare against small thresholds.
inline int64_t packing_bound(double r1, double r2) {
  if (!(r1 > 0.0) || !(r2 > 0.0)) throw ParameterError("packing_bound: radii must be positive");
  double v = 2.0 * r1 / r2 + 1.0;
  v *= v;
  if (v >= 0x1.0p53) return int64_t(1) << 53;
  return static_cast<int64_t>(std::floor(v));
}

// Largest separation d such that packing_bound(r, d) >= gamma/2; any set of
// >= gamma/2 points in a ball of radius r has a pair at distance <= this.
// Found by binary search to 1e-9 absolute tolerance. When even the ball
// diameter 2r satisfies the bound (tiny gamma) the diameter is returned.
inline double dense_pair_spacing(int64_t gamma, double r) {
  if (gamma < 2) throw ParameterError("dense_pair_spacing: gamma must be >= 2");
  if (!(r > 0.0)) throw ParameterError("dense_pair_spacing: r must be positive");
  const double need = static_cast<double>(gamma) / 2.0;
  double hi = 2.0 * r;
  if (static_cast<double>(packing_bound(r, hi)) >= need) return hi;
  double lo = 1e-12 * r;
  while (hi - lo > 1e-9) {
    double mid = 0.5 * (lo + hi);
    if (static_cast<double>(packing_bound(r, mid)) >= need)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

struct ClusterAssignment {
  std::map<NodeId, ClusterId> cluster_of;
  std::map<ClusterId, NodeId> center_of;

  bool has(NodeId v) const { return cluster_of.count(v) != 0; }
  ClusterId cluster(NodeId v) const {
    auto it = cluster_of.find(v);
    if (it == cluster_of.end()) throw ContractError("ClusterAssignment: node " + std::to_string(v) + " unassigned");
    return it->second;
  }
  std::map<ClusterId, std::vector<NodeId>> members() const {
    std::map<ClusterId, std::vector<NodeId>> m;
    for (auto& [v, c] : cluster_of) m[c].push_back(v);
    return m;
  }
};

struct ClosePair {
  NodeId u = -1;
  NodeId w = -1;
  double distance = 0.0;
  double zeta = 0.0;
  ClusterId cluster = 1;
};

// Brute-force enumeration of all close pairs: mutually nearest intra-cluster
// pairs at distance zeta*d_spacing <= 1-eps whose zeta-neighborhoods contain
// no pair closer than half their own distance. Unclustered sets are treated
// as one cluster with r = 1.
inline std::vector<ClosePair> find_close_pairs(std::span<const PlacedNode> nodes,
                                               const ClusterAssignment* clustering,
                                               int64_t gamma, double r, double epsilon) {
  std::vector<ClosePair> out;
  if (nodes.size() < 2) return out;
  const double r_eff = clustering ? r : 1.0;
  const double d_cap = dense_pair_spacing(gamma, r_eff);

  std::map<ClusterId, std::vector<const PlacedNode*>> by_cluster;
  for (const auto& n : nodes) {
    ClusterId c = clustering ? clustering->cluster(n.id) : 1;
    by_cluster[c].push_back(&n);
  }

  for (auto& [cid, mem] : by_cluster) {
    std::sort(mem.begin(), mem.end(),
              [](const PlacedNode* a, const PlacedNode* b) { return a->id < b->id; });
    const size_t m = mem.size();
    for (size_t i = 0; i < m; ++i) {
      for (size_t j = i + 1; j < m; ++j) {
        const PlacedNode* u = mem[i];
        const PlacedNode* w = mem[j];
        const double d = dist(u->pos, w->pos);
        // (b) d = zeta * d_cap <= 1 - eps with zeta in (0, 1]
        if (d > d_cap || d > 1.0 - epsilon || d <= 0.0) continue;
        const double zeta = d / d_cap;
        // (c) u and w are mutually nearest within the cluster
        bool ok = true;
        for (size_t t = 0; t < m && ok; ++t) {
          if (t == i || t == j) continue;
          if (dist(u->pos, mem[t]->pos) < d || dist(w->pos, mem[t]->pos) < d) ok = false;
        }
        if (!ok) continue;
        // (d) no pair inside B(u,zeta) U B(w,zeta) is closer than d/2
        std::vector<const PlacedNode*> near;
        for (size_t t = 0; t < m; ++t) {
          if (dist(u->pos, mem[t]->pos) <= zeta || dist(w->pos, mem[t]->pos) <= zeta)
            near.push_back(mem[t]);
        }
        for (size_t a = 0; a < near.size() && ok; ++a)
          for (size_t b = a + 1; b < near.size() && ok; ++b)
            if (dist(near[a]->pos, near[b]->pos) < d / 2.0) ok = false;
        if (!ok) continue;
        out.push_back(ClosePair{u->id, w->id, d, zeta, cid});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ClosePair& a, const ClosePair& b) {
    return a.u != b.u ? a.u < b.u : a.w < b.w;
  });
  return out;
}

// Unclustered: max node-centered unit-ball population (documented proxy for
// the ball-anywhere definition). Clustered: max cluster cardinality.
inline int64_t density(std::span<const PlacedNode> nodes, const ClusterAssignment* clustering) {
  if (nodes.empty()) return 0;
  if (clustering) {
    std::map<ClusterId, int64_t> count;
    for (const auto& n : nodes) count[clustering->cluster(n.id)]++;
    int64_t best = 0;
    for (auto& [c, k] : count) best = std::max(best, k);
    return best;
  }
  int64_t best = 0;
  for (const auto& a : nodes) {
    int64_t k = 0;
    for (const auto& b : nodes)
      if (dist(a.pos, b.pos) <= 1.0) ++k;
    best = std::max(best, k);
  }
  return best;
}

struct ClusteringViolation {
  enum class Kind { MissingCenter, MemberOutsideRadius, CentersTooClose };
  Kind kind;
  NodeId a = -1;
  NodeId b = -1;
  double value = 0.0;

  std::string describe() const {
    std::ostringstream os;
    switch (kind) {
      case Kind::MissingCenter:
        os << "cluster " << a << " has members but no declared center";
        break;
      case Kind::MemberOutsideRadius:
        os << "node " << a << " at distance " << value << " from center " << b;
        break;
      case Kind::CentersTooClose:
        os << "centers " << a << " and " << b << " at distance " << value;
        break;
    }
    return os.str();
  }
};

struct ClusteringReport {
  std::vector<ClusteringViolation> violations;
  bool valid() const { return violations.empty(); }
};

inline ClusteringReport validate_r_clustering(std::span<const PlacedNode> nodes,
                                              const ClusterAssignment& clustering,
                                              double r, double epsilon) {
  ClusteringReport rep;
  std::map<NodeId, Point> pos;
  for (const auto& n : nodes) pos[n.id] = n.pos;

  auto clusters = clustering.members();
  for (auto& [cid, mem] : clusters) {
    auto cit = clustering.center_of.find(cid);
    if (cit == clustering.center_of.end()) {
      rep.violations.push_back({ClusteringViolation::Kind::MissingCenter, cid, -1, 0.0});
      continue;
    }
    auto cpos = pos.find(cit->second);
    if (cpos == pos.end()) continue;  // center not among the given nodes; radius unchecked
    for (NodeId v : mem) {
      auto vp = pos.find(v);
      if (vp == pos.end()) continue;
      double d = dist(vp->second, cpos->second);
      if (d > r + 1e-9)
        rep.violations.push_back({ClusteringViolation::Kind::MemberOutsideRadius, v, cit->second, d});
    }
  }
  std::vector<std::pair<ClusterId, NodeId>> centers(clustering.center_of.begin(), clustering.center_of.end());
  for (size_t i = 0; i < centers.size(); ++i) {
    auto pi = pos.find(centers[i].second);
    if (pi == pos.end()) continue;
    if (!clusters.count(centers[i].first)) continue;  // empty cluster: spacing irrelevant
    for (size_t j = i + 1; j < centers.size(); ++j) {
      if (!clusters.count(centers[j].first)) continue;
      auto pj = pos.find(centers[j].second);
      if (pj == pos.end()) continue;
      double d = dist(pi->second, pj->second);
      if (d < 1.0 - epsilon - 1e-9)
        rep.violations.push_back({ClusteringViolation::Kind::CentersTooClose,
                                  centers[i].second, centers[j].second, d});
    }
  }
  return rep;
}

}  // namespace sinrnet
