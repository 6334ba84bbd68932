#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "sinrnet/common.hpp"
#include "sinrnet/geometry.hpp"

namespace sinrnet {

// Physical-model constants. Power is pinned to noise*beta so a sole
// transmitter is heard at distance exactly 1 and not beyond.
struct SinrParams {
  double alpha = 3.0;
  double beta = 2.0;
  double noise = 1.0;
  double power = 2.0;
  double epsilon = 0.2;
  int id_bound = 64;

  static SinrParams make(double alpha, double beta, double noise, double epsilon, int id_bound) {
    if (!(alpha > 2.0)) throw ParameterError("SinrParams: alpha must exceed 2");
    if (!(beta > 1.0)) throw ParameterError("SinrParams: beta must exceed 1");
    if (!(noise > 0.0)) throw ParameterError("SinrParams: noise must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("SinrParams: epsilon must lie in (0,1)");
    if (id_bound < 1) throw ParameterError("SinrParams: id_bound must be positive");
    SinrParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.noise = noise;
    p.power = noise * beta;
    p.epsilon = epsilon;
    p.id_bound = id_bound;
    return p;
  }
};

struct NetNode {
  NodeId id = -1;
  Point pos;
};

class Network {
 public:
  Network() = default;

  static Network make(SinrParams params, std::vector<NetNode> nodes) {
    Network net;
    net.params_ = params;
    std::sort(nodes.begin(), nodes.end(), [](const NetNode& a, const NetNode& b) { return a.id < b.id; });
    if (static_cast<int>(nodes.size()) > params.id_bound)
      throw ParameterError("Network: more nodes than id_bound");
    for (size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.id < 1 || n.id > params.id_bound)
        throw ParameterError("Network: node id " + std::to_string(n.id) + " outside [1, N]");
      if (i > 0 && nodes[i - 1].id == n.id)
        throw ParameterError("Network: duplicate id " + std::to_string(n.id));
      if (!std::isfinite(n.pos.x) || !std::isfinite(n.pos.y))
        throw ParameterError("Network: non-finite coordinate");
    }
    for (size_t i = 0; i < nodes.size(); ++i)
      for (size_t j = i + 1; j < nodes.size(); ++j)
        if (nodes[i].pos.x == nodes[j].pos.x && nodes[i].pos.y == nodes[j].pos.y)
          throw ParameterError("Network: coincident positions for ids " + std::to_string(nodes[i].id) +
                               " and " + std::to_string(nodes[j].id));
    net.nodes_ = std::move(nodes);
    net.index_.assign(params.id_bound + 1, -1);
    for (size_t i = 0; i < net.nodes_.size(); ++i) net.index_[net.nodes_[i].id] = static_cast<int>(i);
    const size_t n = net.nodes_.size();
    net.dist_.assign(n * n, 0.0);
    net.gain_.assign(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j) {
        double d = dist(net.nodes_[i].pos, net.nodes_[j].pos);
        net.dist_[i * n + j] = d;
        net.gain_[i * n + j] = (i == j) ? 0.0 : params.power * std::pow(d, -params.alpha);
      }
    net.unit_nbrs_.assign(n, {});
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (i != j && net.dist_[i * n + j] <= 1.0) net.unit_nbrs_[i].push_back(static_cast<int>(j));
    return net;
  }

  const SinrParams& params() const { return params_; }
  size_t size() const { return nodes_.size(); }
  const std::vector<NetNode>& nodes() const { return nodes_; }

  bool has(NodeId id) const {
    return id >= 1 && id < static_cast<int>(index_.size()) && index_[id] >= 0;
  }
  int index(NodeId id) const {
    if (!has(id)) throw ParameterError("Network: unknown id " + std::to_string(id));
    return index_[id];
  }
  NodeId id_at(int idx) const { return nodes_[idx].id; }
  const Point& pos(NodeId id) const { return nodes_[index(id)].pos; }

  double distance(NodeId a, NodeId b) const { return dist_[index(a) * size() + index(b)]; }
  double dist_by_index(int a, int b) const { return dist_[a * size() + b]; }
  double gain_by_index(int tx, int rx) const { return gain_[tx * size() + rx]; }
  // node indices within distance 1 of idx (candidate receivers of idx)
  const std::vector<int>& unit_neighbors(int idx) const { return unit_nbrs_[idx]; }

  std::vector<PlacedNode> placed() const {
    std::vector<PlacedNode> out;
    out.reserve(nodes_.size());
    for (const auto& n : nodes_) out.push_back({n.id, n.pos});
    return out;
  }

 private:
  SinrParams params_;
  std::vector<NetNode> nodes_;
  std::vector<int> index_;
  std::vector<double> dist_;
  std::vector<double> gain_;
  std::vector<std::vector<int>> unit_nbrs_;
};

struct ReceptionEvent {
  NodeId receiver = -1;
  NodeId sender = -1;
  Round round = 0;
  double sinr_value = 0.0;
};

// Eq.-style reception predicate value for one (sender, receiver) pair.
inline double sinr(NodeId sender, NodeId receiver, const std::vector<NodeId>& transmitters,
                   const Network& net, double extra_interference = 0.0) {
  if (sender == receiver) throw ContractError("sinr: sender == receiver");
  if (std::find(transmitters.begin(), transmitters.end(), sender) == transmitters.end())
    throw ContractError("sinr: sender not in transmitter set");
  const auto& p = net.params();
  int rx = net.index(receiver);
  double signal = 0.0;
  double interference = 0.0;
  for (NodeId t : transmitters) {
    double g = net.gain_by_index(net.index(t), rx);
    if (t == sender)
      signal = g;
    else
      interference += g;
  }
  return signal / (p.noise + extra_interference + interference);
}

// Resolves one synchronous round. Half-duplex: transmitting nodes receive
// nothing. With beta > 1 at most one sender can clear the threshold per
// receiver, which is asserted.
inline std::vector<ReceptionEvent> resolve_round(const std::vector<NodeId>& transmitters,
                                                 const Network& net,
                                                 double extra_interference = 0.0) {
  std::vector<ReceptionEvent> out;
  if (transmitters.empty()) return out;
  const auto& p = net.params();
  const size_t n = net.size();

  thread_local std::vector<double> total;
  thread_local std::vector<uint8_t> is_tx;
  total.assign(n, 0.0);
  is_tx.assign(n, 0);

  std::vector<int> tx_idx;
  tx_idx.reserve(transmitters.size());
  for (NodeId t : transmitters) {
    int i = net.index(t);
    tx_idx.push_back(i);
    is_tx[i] = 1;
  }
  // candidate receivers: within distance 1 of some transmitter (a sole
  // transmitter at distance exactly 1 meets the threshold; nothing beyond)
  thread_local std::vector<int> cand;
  thread_local std::vector<uint8_t> seen;
  cand.clear();
  seen.assign(n, 0);
  for (int ti : tx_idx)
    for (int r : net.unit_neighbors(ti))
      if (!seen[r] && !is_tx[r]) {
        seen[r] = 1;
        cand.push_back(r);
      }
  for (int r : cand) {
    double tot = 0.0;
    double best = -1.0;
    int best_tx = -1;
    for (int ti : tx_idx) {
      double g = net.gain_by_index(ti, r);
      tot += g;
      if (g > best) {
        best = g;
        best_tx = ti;
      }
    }
    double s = best / (p.noise + extra_interference + (tot - best));
    if (s >= p.beta) {
      // beta > 1 rules out a second qualifying sender; check the runner-up
      double second = -1.0;
      for (int ti : tx_idx) {
        if (ti == best_tx) continue;
        double g = net.gain_by_index(ti, r);
        if (g > second) second = g;
      }
      if (second > 0.0) {
        double s2 = second / (p.noise + extra_interference + (tot - second));
        if (s2 >= p.beta)
          throw ContractError("resolve_round: two receptions at one receiver despite beta > 1");
      }
      out.push_back(ReceptionEvent{net.id_at(r), net.id_at(best_tx), 0, s});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ReceptionEvent& a, const ReceptionEvent& b) { return a.receiver < b.receiver; });
  return out;
}

struct CommGraph {
  std::map<NodeId, std::vector<NodeId>> adj;
  int max_degree = 0;
  int64_t diameter = 0;  // largest finite hop distance
  bool connected = true;

  const std::vector<NodeId>& neighbors(NodeId v) const {
    static const std::vector<NodeId> none;
    auto it = adj.find(v);
    return it == adj.end() ? none : it->second;
  }
};

// Edges join nodes at distance <= 1 - epsilon (boundary inclusive).
inline CommGraph communication_graph(const Network& net) {
  CommGraph g;
  const double cut = 1.0 - net.params().epsilon + 1e-12;
  const size_t n = net.size();
  for (const auto& node : net.nodes()) g.adj[node.id] = {};
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (net.dist_by_index(static_cast<int>(i), static_cast<int>(j)) <= cut) {
        g.adj[net.id_at(static_cast<int>(i))].push_back(net.id_at(static_cast<int>(j)));
        g.adj[net.id_at(static_cast<int>(j))].push_back(net.id_at(static_cast<int>(i)));
      }
  for (auto& [v, nb] : g.adj) {
    std::sort(nb.begin(), nb.end());
    g.max_degree = std::max(g.max_degree, static_cast<int>(nb.size()));
  }
  // BFS from every node for eccentricities / connectivity
  if (n > 0) {
    std::vector<std::vector<int>> idx_adj(n);
    for (auto& [v, nb] : g.adj)
      for (NodeId u : nb) idx_adj[net.index(v)].push_back(net.index(u));
    std::vector<int> d(n);
    for (size_t s = 0; s < n; ++s) {
      std::fill(d.begin(), d.end(), -1);
      std::deque<int> q{static_cast<int>(s)};
      d[s] = 0;
      while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int u : idx_adj[v])
          if (d[u] < 0) {
            d[u] = d[v] + 1;
            q.push_back(u);
          }
      }
      for (size_t t = 0; t < n; ++t) {
        if (d[t] < 0)
          g.connected = false;
        else
          g.diameter = std::max<int64_t>(g.diameter, d[t]);
      }
    }
  }
  return g;
}

// hop distances from a source set (BFS oracle for frontier checks)
inline std::map<NodeId, int64_t> bfs_layers(const CommGraph& g, const std::vector<NodeId>& sources) {
  std::map<NodeId, int64_t> d;
  std::deque<NodeId> q;
  for (NodeId s : sources) {
    d[s] = 0;
    q.push_back(s);
  }
  while (!q.empty()) {
    NodeId v = q.front();
    q.pop_front();
    for (NodeId u : g.neighbors(v))
      if (!d.count(u)) {
        d[u] = d[v] + 1;
        q.push_back(u);
      }
  }
  return d;
}

// ---------------------------------------------------------------------------
// Numeric derivation of the interference-budget constants. These are the
// faithful bounds: an annulus [i*r, (i+1)*r] around a receiver is covered by
// at most 2*pi/sqrt(3)*(i+0.5)+2 balls of radius r, each holding at most
// delta transmitters at distance >= i*r.
// ---------------------------------------------------------------------------

inline double ring_sum(int64_t x, double alpha) {
  constexpr double C = 3.6275987284684357;  // 2*pi/sqrt(3)
  double s = 0.0;
  const int64_t M = x + 20000;
  for (int64_t i = x; i < M; ++i) s += (C * (i + 0.5) + 2.0) * std::pow(static_cast<double>(i), -alpha);
  // integral tails for the linear and constant parts of the covering count
  s += C * (std::pow(static_cast<double>(M), 2.0 - alpha) / (alpha - 2.0) +
            0.5 * std::pow(static_cast<double>(M), 1.0 - alpha) / (alpha - 1.0));
  s += 2.0 * std::pow(static_cast<double>(M), 1.0 - alpha) / (alpha - 1.0);
  return s;
}

struct ConstantsBundle {
  int64_t kappa = 0;       // close-neighborhood size bound |A'|
  int64_t rho = 0;         // conflicting-cluster bound
  int x_radius = 0;        // inner exclusion radius, in multiples of the pair distance
  int sns_x = 0;           // exclusion radius (in units) for the sparse-network schedule
  int64_t k_gamma = 0;     // ssf parameter of the sparse-network schedule
  bool close_lemma_applies = false;  // both gamma-gated budget checks hold
  std::string fallback_reason;       // which inequality forced the fallback
};

namespace detail_budget {
// smallest x >= 2 with pred(x) true, for predicates monotone in x
template <typename Pred>
int64_t smallest_radius(Pred pred, const char* what) {
  int64_t hi = 2;
  while (!pred(hi)) {
    if (hi > (int64_t(1) << 40)) throw ParameterError(std::string("derive_constants: no finite radius for ") + what);
    hi *= 2;
  }
  int64_t lo = hi / 2 < 2 ? 2 : hi / 2;
  while (lo < hi) {
    int64_t mid = lo + (hi - lo) / 2;
    if (pred(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return hi;
}
}  // namespace detail_budget

// Searches the smallest integer exclusion radii satisfying the interference
// budgets, then converts them to the packing-bound constants. gamma_cap is
// the density bound the budgets are evaluated at; r the clustering radius.
inline ConstantsBundle derive_constants(const SinrParams& p, int64_t gamma_cap, double r) {
  if (gamma_cap < 2) throw ParameterError("derive_constants: gamma_cap must be >= 2");
  if (!(r >= 1.0)) throw ParameterError("derive_constants: r must be >= 1");
  ConstantsBundle b;

  // near-field budget: delta * ring_sum(x) <= 2^-alpha / (4 beta), with
  // delta = packing_bound(d, d/2) = 25 independent of the pair distance d
  const double i1_budget = std::pow(2.0, -p.alpha) / (4.0 * p.beta);
  const double delta_near = static_cast<double>(packing_bound(1.0, 0.5));
  int64_t x = detail_budget::smallest_radius(
      [&](int64_t v) { return delta_near * ring_sum(v, p.alpha) <= i1_budget; },
      "the near-field budget");
  b.x_radius = static_cast<int>(x);
  b.kappa = std::max<int64_t>(2, static_cast<int64_t>(std::floor((4.0 * x + 1.0) * (4.0 * x + 1.0))));
  b.rho = packing_bound(2.0 * r + 1.0, 1.0 - p.epsilon);

  // gamma-gated checks of the close-pair budget
  const double d_pair = dense_pair_spacing(gamma_cap, 1.0);
  const bool e0 = d_pair <= std::pow(2.0, -1.0 / p.alpha);
  const bool e2 = static_cast<double>(gamma_cap) * ring_sum(1, p.alpha) <=
                  std::pow(2.0 * d_pair, -p.alpha) / (4.0 * p.beta);
  b.close_lemma_applies = e0 && e2;
  if (!e0) b.fallback_reason = "noise budget: dense-pair spacing exceeds 2^(-1/alpha)";
  else if (!e2) b.fallback_reason = "far-field budget fails at this density";

  // sparse-network schedule: gamma * beta * ring_sum(x) <= (1-eps)^-alpha - 1
  const double sns_budget = std::pow(1.0 - p.epsilon, -p.alpha) - 1.0;
  int64_t xs = detail_budget::smallest_radius(
      [&](int64_t v) { return static_cast<double>(gamma_cap) * p.beta * ring_sum(v, p.alpha) <= sns_budget; },
      "the schedule budget");
  b.sns_x = static_cast<int>(std::min<int64_t>(xs, 1 << 30));
  double kg = static_cast<double>(gamma_cap) * static_cast<double>(packing_bound(static_cast<double>(xs), 1.0));
  b.k_gamma = kg >= 0x1.0p53 ? (int64_t(1) << 53) : static_cast<int64_t>(kg);
  return b;
}

}  // namespace sinrnet
