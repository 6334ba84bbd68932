#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "sinrnet/engine.hpp"

namespace sinrnet {

// Collinear family: source s, a geometrically spaced core v_0..v_{delta+1}
// and a target t that only the last core node can reach.
struct GadgetSpec {
  int delta = 0;
  double epsilon = 0.05;
  Point s, t;
  std::vector<Point> core;  // v_0 .. v_{delta+1}

  int slots() const { return delta + 4; }  // s, core, t
  Point slot_pos(int slot) const {
    if (slot == 0) return s;
    if (slot <= delta + 2) return core[slot - 1];
    return t;
  }
};

// beta must exceed 2^alpha for the two-transmitter silence property of the
// core to hold; the default leaves one unit of margin.
inline SinrParams gadget_params(int id_bound, double alpha = 3.0, double epsilon = 0.05) {
  return SinrParams::make(alpha, std::pow(2.0, alpha) + 1.0, 1.0, epsilon, id_bound);
}

// external-interference budget of the core: the level at which a message
// over distance 4*eps is still exactly decodable
inline double nu_budget(const SinrParams& p) {
  return p.power * std::pow(4.0 * p.epsilon, -p.alpha) / p.beta - p.noise;
}

inline GadgetSpec build_gadget(int delta, double epsilon, Point origin = {0.0, 0.0}) {
  if (delta < 1 || delta > 200) throw ParameterError("build_gadget: delta out of range");
  if (!(epsilon > 0.0 && epsilon < 0.2)) throw ParameterError("build_gadget: epsilon must lie in (0, 0.2)");
  GadgetSpec g;
  g.delta = delta;
  g.epsilon = epsilon;
  g.core.resize(delta + 2);
  g.core[0] = origin;
  for (int i = 0; i < delta; ++i)
    g.core[i + 1] = {g.core[i].x + epsilon / std::pow(2.0, delta - i), origin.y};
  g.core[delta + 1] = {g.core[delta].x + 1.5 * epsilon, origin.y};
  g.t = {g.core[delta + 1].x + (1.0 - epsilon), origin.y};
  g.s = {g.core[0].x - (1.0 - 4.0 * epsilon), origin.y};

  const double span = dist(g.core[0], g.core[delta + 1]);
  if (!(span > 2.0 * epsilon && span < 3.0 * epsilon))
    throw ParameterError("build_gadget: core span outside (2eps, 3eps)");
  for (int i = 0; i <= delta; ++i)
    if (!(dist(g.core[i], g.t) > 1.0))
      throw ParameterError("build_gadget: a non-final core node reaches the target");
  if (!(dist(g.s, g.t) > 1.0)) throw ParameterError("build_gadget: source reaches the target");
  if (!(dist(g.core[delta + 1], g.t) <= 1.0 - epsilon + 1e-12))
    throw ParameterError("build_gadget: final core node cannot reach the target");
  for (int i = 0; i <= delta + 1; ++i)
    if (!(dist(g.s, g.core[i]) <= 1.0 - epsilon + 1e-12))
      throw ParameterError("build_gadget: source does not cover the core");
  return g;
}

// slot order: s = slot 0, v_i = slot i+1, t = slot delta+3
inline Network gadget_network(const GadgetSpec& g, const SinrParams& params,
                              const std::vector<NodeId>& slot_ids) {
  if (static_cast<int>(slot_ids.size()) != g.slots())
    throw ParameterError("gadget_network: need one id per slot");
  std::vector<NetNode> nodes;
  for (int i = 0; i < g.slots(); ++i) nodes.push_back({slot_ids[i], g.slot_pos(i)});
  return Network::make(params, nodes);
}

namespace detail_lb {

// reception test over raw positions (the adversary works slot-wise, before
// ids exist); mirrors resolve_round semantics exactly
struct SlotPhysics {
  const SinrParams* p;
  std::vector<Point> pos;
  std::vector<std::vector<double>> gain;

  SlotPhysics(const SinrParams& params, std::vector<Point> positions) : p(&params), pos(std::move(positions)) {
    const size_t n = pos.size();
    gain.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (i != j) gain[i][j] = p->power * std::pow(dist(pos[i], pos[j]), -p->alpha);
  }

  // sender slot heard at receiver slot, among the given transmitter slots
  std::optional<int> reception_at(int receiver, const std::vector<int>& tx, double extra) const {
    double tot = 0.0, best = -1.0;
    int best_tx = -1;
    for (int s : tx) {
      if (s == receiver) return std::nullopt;  // half duplex
      tot += gain[s][receiver];
      if (gain[s][receiver] > best) {
        best = gain[s][receiver];
        best_tx = s;
      }
    }
    if (best_tx < 0) return std::nullopt;
    double v = best / (p->noise + extra + (tot - best));
    if (v >= p->beta) return best_tx;
    return std::nullopt;
  }
};

}  // namespace detail_lb

struct CoreFactReport {
  bool ok = true;
  int64_t sets_checked = 0;
  std::vector<int> counterexample_slots;  // transmitting core indices
  std::string violated;
  double nu = 0.0;
};

// Checks, over exhaustive (delta <= 20) or sampled transmitter subsets of
// the core: (1) two transmitters v_i, v_j silence everything right of v_j,
// (2) t hears v_{delta+1} only when it is the sole core transmitter, and
// the positive counterparts: a sole core transmitter is heard by the whole
// core even under external interference nu, and by t with a quiet channel.
inline CoreFactReport verify_core_facts(const GadgetSpec& g, const SinrParams& params,
                                        int64_t sample_count = 100000, uint64_t seed = 1) {
  CoreFactReport rep;
  rep.nu = nu_budget(params);
  const int n_core = g.delta + 2;
  std::vector<Point> pos;
  for (int i = 0; i < n_core; ++i) pos.push_back(g.core[i]);
  pos.push_back(g.t);
  const int t_slot = n_core;
  detail_lb::SlotPhysics phys(params, pos);

  auto check_set = [&](const std::vector<int>& tx) {
    ++rep.sets_checked;
    auto fail = [&](const std::string& why) {
      rep.ok = false;
      rep.counterexample_slots = tx;
      rep.violated = why;
    };
    if (tx.size() >= 2) {
      const int j = tx[1];  // second smallest transmitting index
      for (int m = j + 1; m < n_core && rep.ok; ++m) {
        if (std::binary_search(tx.begin(), tx.end(), m)) continue;
        for (double extra : {0.0, rep.nu})
          if (phys.reception_at(m, tx, extra)) {
            fail("two transmitters but core node " + std::to_string(m) + " still receives");
            break;
          }
      }
      if (rep.ok && std::binary_search(tx.begin(), tx.end(), n_core - 1)) {
        for (double extra : {0.0, rep.nu})
          if (phys.reception_at(t_slot, tx, extra)) {
            fail("target receives despite a second core transmitter");
            break;
          }
      }
    } else if (tx.size() == 1) {
      for (int m = 0; m < n_core && rep.ok; ++m) {
        if (m == tx[0]) continue;
        if (!phys.reception_at(m, tx, rep.nu))
          fail("sole core transmitter not heard at core node " + std::to_string(m) +
               " under interference nu");
      }
      if (rep.ok && tx[0] == n_core - 1 && !phys.reception_at(t_slot, tx, 0.0))
        fail("target misses the sole final-node transmission on a quiet channel");
    }
    return rep.ok;
  };

  if (g.delta <= 20) {
    const uint32_t limit = uint32_t(1) << n_core;
    std::vector<int> tx;
    for (uint32_t mask = 1; mask < limit; ++mask) {
      tx.clear();
      for (int i = 0; i < n_core; ++i)
        if (mask & (uint32_t(1) << i)) tx.push_back(i);
      if (!check_set(tx)) return rep;
    }
  } else {
    Rng rng(seed);
    std::vector<int> tx;
    for (int64_t it = 0; it < sample_count; ++it) {
      tx.clear();
      double density = 0.05 + 0.9 * rng.unit();
      for (int i = 0; i < n_core; ++i)
        if (rng.bernoulli(density)) tx.push_back(i);
      if (tx.empty()) tx.push_back(static_cast<int>(rng.below(n_core)));
      if (!check_set(tx)) return rep;
    }
  }
  return rep;
}

struct ChainSpec {
  int delta = 0;
  double epsilon = 0.05;
  int gadget_count = 0;
  int path_len = 0;  // separator nodes between consecutive gadgets
  std::vector<GadgetSpec> gadgets;
  std::vector<std::vector<NodeId>> gadget_slot_ids;  // per gadget: slot -> id
  std::vector<NodeId> separator_ids;                 // flattened paths
  NodeId source_id = -1;
  NodeId final_target_id = -1;
};

struct ChainBuild {
  ChainSpec spec;
  Network net;
};

inline ChainBuild build_chain(int target_diameter, int delta, double epsilon, double alpha = 3.0) {
  if (delta < 1) throw ParameterError("build_chain: delta must be positive");
  const int kappa_path =
      std::max<int>(1, static_cast<int>(std::ceil(std::pow(delta, 1.0 / alpha) / (1.0 - epsilon))));
  const int gadgets = std::max(1, target_diameter / kappa_path);
  ChainBuild out;
  out.spec.delta = delta;
  out.spec.epsilon = epsilon;
  out.spec.gadget_count = gadgets;
  out.spec.path_len = kappa_path;

  const double hop = 1.0 - epsilon;
  std::vector<NetNode> nodes;
  NodeId next_id = 1;
  double source_x = 0.0;  // where the next gadget's source goes
  for (int gi = 0; gi < gadgets; ++gi) {
    GadgetSpec g = build_gadget(delta, epsilon, {source_x + (1.0 - 4.0 * epsilon), 0.0});
    std::vector<NodeId> ids;
    for (int slot = 0; slot < g.slots(); ++slot) {
      nodes.push_back({next_id, g.slot_pos(slot)});
      ids.push_back(next_id++);
    }
    out.spec.gadgets.push_back(g);
    out.spec.gadget_slot_ids.push_back(ids);
    if (gi + 1 < gadgets) {
      // separator path after the target; the next source continues the relay
      double wx = g.t.x;
      for (int w = 1; w <= kappa_path; ++w) {
        nodes.push_back({next_id, {wx + w * hop, 0.0}});
        out.spec.separator_ids.push_back(next_id++);
      }
      source_x = wx + kappa_path * hop + hop;
    }
  }
  out.spec.source_id = out.spec.gadget_slot_ids.front().front();
  out.spec.final_target_id = out.spec.gadget_slot_ids.back().back();
  int nbound = 1;
  while (nbound < 2 * static_cast<int>(nodes.size())) nbound <<= 1;
  auto params = gadget_params(nbound, alpha, epsilon);
  out.net = Network::make(params, nodes);
  return out;
}

struct ChainAudit {
  bool ok = true;
  double nu = 0.0;
  double worst_interference = 0.0;
  int worst_gadget = -1;
  double path_group_bound = 0.0;     // nearest-separator-path sum (one side)
  double distant_group_bound = 0.0;  // everything further away (one side)
};

// Worst case: every node outside a gadget transmits at once; the external
// interference at each of its core nodes must stay below nu.
inline ChainAudit audit_chain(const ChainBuild& cb) {
  ChainAudit a;
  const auto& p = cb.net.params();
  a.nu = nu_budget(p);
  for (int gi = 0; gi < cb.spec.gadget_count; ++gi) {
    std::set<NodeId> own(cb.spec.gadget_slot_ids[gi].begin(), cb.spec.gadget_slot_ids[gi].end());
    const auto& g = cb.spec.gadgets[gi];
    for (int slot = 1; slot <= g.delta + 2; ++slot) {
      Point rx = g.slot_pos(slot);
      double total = 0.0;
      for (const auto& node : cb.net.nodes()) {
        if (own.count(node.id)) continue;
        total += p.power * std::pow(dist(node.pos, rx), -p.alpha);
      }
      if (total > a.worst_interference) {
        a.worst_interference = total;
        a.worst_gadget = gi;
      }
    }
  }
  a.ok = a.worst_interference <= a.nu;
  // the proof's two-group estimate, for reference
  const double hop = 1.0 - cb.spec.epsilon;
  for (int i = 1; i <= cb.spec.path_len; ++i)
    a.path_group_bound += p.power * std::pow(hop * i, -p.alpha);
  for (int k = 1; k <= cb.spec.gadget_count; ++k)
    a.distant_group_bound +=
        2.0 * cb.spec.delta * p.power / std::pow(k * std::pow(cb.spec.delta, 1.0 / p.alpha), p.alpha);
  return a;
}

// ---------------------------------------------------------------------------
// Adversarial id assignment (black-box, deterministic, position-blind
// algorithms). Candidates are simulated in a virtual environment fed the
// common core transcript; assigned nodes run on exact slot physics.
// ---------------------------------------------------------------------------

struct AdversaryResult {
  std::vector<NodeId> slot_ids;      // s, v_0..v_{delta+1}, t
  Round certified_round = 0;         // no delivery to t strictly before this round
  std::vector<Round> step_rounds;
  bool budget_capped = false;
  Round canonical_t_reception = -1;  // t's first reception in the canonical run
};

using ProtocolFactory = std::function<std::unique_ptr<Protocol>()>;

inline AdversaryResult adversary_assign_ids(const ProtocolFactory& make_protocol, const GadgetSpec& g,
                                            const SinrParams& params, std::vector<NodeId> allowed_ids,
                                            Round round_budget) {
  std::sort(allowed_ids.begin(), allowed_ids.end());
  if (static_cast<int>(allowed_ids.size()) < g.delta + 4)
    throw ParameterError("adversary_assign_ids: need at least delta+4 allowed ids");

  // the virtual feed is only position-independent if a sole core transmitter
  // is heard across the whole core despite the source transmitting too
  {
    std::vector<Point> pos{g.s};
    for (auto& c : g.core) pos.push_back(c);
    detail_lb::SlotPhysics phys(params, pos);
    for (int i = 1; i <= g.delta + 2; ++i)
      for (int m = 1; m <= g.delta + 2; ++m) {
        if (m == i) continue;
        if (!phys.reception_at(m, {0, i}, 0.0))
          throw ParameterError("adversary_assign_ids: core not position-symmetric at these parameters");
      }
  }

  const NodeId t_id = allowed_ids.back();
  const NodeId s_id = allowed_ids[allowed_ids.size() - 2];
  std::vector<NodeId> pool(allowed_ids.begin(), allowed_ids.end() - 2);

  // slot indexing: 0 = s, 1..delta+2 = core, delta+3 = t
  std::vector<Point> pos;
  pos.push_back(g.s);
  for (auto& c : g.core) pos.push_back(c);
  pos.push_back(g.t);
  detail_lb::SlotPhysics phys(params, pos);
  const int n_core = g.delta + 2;
  const int t_slot = n_core + 1;

  struct Inst {
    std::unique_ptr<Protocol> proto;
    bool awake = false;
    Round wake_round = -2;
  };
  std::map<NodeId, Inst> inst;
  auto ensure = [&](NodeId id) -> Inst& {
    auto it = inst.find(id);
    if (it != inst.end()) return it->second;
    auto& e = inst[id];
    e.proto = make_protocol();
    return e;
  };

  // the source is physical from the start
  ensure(s_id).awake = true;
  ensure(s_id).wake_round = -1;
  ensure(s_id).proto->on_wake(s_id, -1, nullptr);
  for (NodeId id : pool) ensure(id);
  ensure(t_id);

  std::vector<NodeId> slot_of_core(n_core, -1);  // core index -> id
  int assigned = 0;
  bool forced_final_tx = false;
  AdversaryResult res;
  // transcript of the common feed, for the determinism recheck
  struct Feed { Round round; NodeId sender; Message msg; };
  std::vector<Feed> common_feed;
  std::vector<Round> probe_tx;  // recorded transmit rounds of pool.front()
  const NodeId probe_id = pool.front();

  Round r = 0;
  for (; r < round_budget && assigned < n_core; ++r) {
    // physical decisions: s and the assigned core nodes
    std::vector<std::pair<int, Message>> phys_tx;  // (slot, message)
    auto act = [&](NodeId id, int slot) {
      Inst& e = ensure(id);
      if (!e.awake || e.wake_round >= r) return;
      auto m = e.proto->on_round_start(id, r);
      if (m) phys_tx.push_back({slot, std::move(*m)});
    };
    act(s_id, 0);
    for (int c = 0; c < n_core; ++c)
      if (slot_of_core[c] >= 0) act(slot_of_core[c], c + 1);

    // pool decisions under the virtual regime
    std::vector<std::pair<NodeId, Message>> pool_tx;
    for (NodeId id : pool) {
      Inst& e = ensure(id);
      if (!e.awake || e.wake_round >= r) continue;
      auto m = e.proto->on_round_start(id, r);
      if (m) pool_tx.push_back({id, std::move(*m)});
    }
    for (auto& [id, m] : pool_tx)
      if (id == probe_id) probe_tx.push_back(r);

    // assignment step
    if (!pool_tx.empty()) {
      res.step_rounds.push_back(r);
      const int remaining = n_core - assigned;
      NodeId first = pool_tx.front().first;
      if (remaining >= 2) {
        NodeId second = -1;
        if (pool_tx.size() >= 2)
          second = pool_tx[1].first;
        else
          for (NodeId id : pool)
            if (id != first) {
              second = id;
              break;
            }
        slot_of_core[assigned] = first;
        slot_of_core[assigned + 1] = second;
        assigned += 2;
        pool.erase(std::remove(pool.begin(), pool.end(), first), pool.end());
        pool.erase(std::remove(pool.begin(), pool.end(), second), pool.end());
        // the colliding transmitters act physically this very round
        for (auto& [id, m] : pool_tx) {
          if (id == first) phys_tx.push_back({assigned - 1, m});
          if (id == second) phys_tx.push_back({assigned, m});
        }
      } else {
        // a single slot left: prefer a silent id so the final node cannot be
        // the sole transmitter at this round
        NodeId chosen = -1;
        std::set<NodeId> loud;
        for (auto& [id, m] : pool_tx) loud.insert(id);
        for (NodeId id : pool)
          if (!loud.count(id)) {
            chosen = id;
            break;
          }
        if (chosen < 0) {
          chosen = first;  // forced: every pool id transmits this round
          forced_final_tx = true;
        }
        slot_of_core[assigned] = chosen;
        ++assigned;
        pool.erase(std::remove(pool.begin(), pool.end(), chosen), pool.end());
        if (loud.count(chosen))
          for (auto& [id, m] : pool_tx)
            if (id == chosen) phys_tx.push_back({assigned, m});
      }
    }

    // physical resolution over the known slots
    std::vector<int> tx_slots;
    for (auto& [slot, m] : phys_tx) tx_slots.push_back(slot);
    std::sort(tx_slots.begin(), tx_slots.end());
    tx_slots.erase(std::unique(tx_slots.begin(), tx_slots.end()), tx_slots.end());
    auto msg_of_slot = [&](int slot) -> const Message* {
      for (auto& [sl, m] : phys_tx)
        if (sl == slot) return &m;
      return nullptr;
    };
    auto id_of_slot = [&](int slot) -> NodeId {
      if (slot == 0) return s_id;
      if (slot == t_slot) return t_id;
      return slot_of_core[slot - 1];
    };
    if (!tx_slots.empty()) {
      for (int rx = 0; rx <= t_slot; ++rx) {
        NodeId rid = id_of_slot(rx);
        if (rid < 0) continue;
        auto sender_slot = phys.reception_at(rx, tx_slots, 0.0);
        if (!sender_slot) continue;
        const Message* m = msg_of_slot(*sender_slot);
        if (!m) continue;
        if (rx == t_slot && res.canonical_t_reception < 0) res.canonical_t_reception = r;
        Inst& e = ensure(rid);
        if (!e.awake) {
          e.awake = true;
          e.wake_round = r;
          e.proto->on_wake(rid, r, m);
        } else {
          e.proto->on_receive(rid, r, id_of_slot(*sender_slot), *m);
        }
      }
    }

    // common feed for the remaining pool: exactly one core transmitter is
    // heard by every unassigned position; otherwise only a lone source
    int core_count = 0, core_slot = -1;
    for (int slot : tx_slots)
      if (slot >= 1 && slot <= n_core) {
        ++core_count;
        core_slot = slot;
      }
    const Message* feed = nullptr;
    NodeId feed_sender = -1;
    if (core_count == 1) {
      feed = msg_of_slot(core_slot);
      feed_sender = id_of_slot(core_slot);
    } else if (core_count == 0 && !tx_slots.empty() && tx_slots.front() == 0) {
      feed = msg_of_slot(0);
      feed_sender = s_id;
    }
    if (feed) {
      common_feed.push_back({r, feed_sender, *feed});
      for (NodeId id : pool) {
        Inst& e = ensure(id);
        bool tx_now = false;
        for (auto& [pid, m] : pool_tx)
          if (pid == id) tx_now = true;
        if (tx_now) continue;  // half duplex
        if (!e.awake) {
          e.awake = true;
          e.wake_round = r;
          e.proto->on_wake(id, r, feed);
        } else {
          e.proto->on_receive(id, r, feed_sender, *feed);
        }
      }
    }
  }

  if (assigned < n_core) {
    res.budget_capped = true;
    for (int c = 0; c < n_core && !pool.empty(); ++c)
      if (slot_of_core[c] < 0) {
        slot_of_core[c] = pool.front();
        pool.erase(pool.begin());
      }
    res.certified_round = round_budget;
  } else if (forced_final_tx) {
    // the final node may have transmitted alone at the last step round
    res.certified_round = res.step_rounds.empty() ? 0 : res.step_rounds.back();
  } else {
    res.certified_round = res.step_rounds.empty() ? 0 : res.step_rounds.back() + 1;
  }

  // determinism recheck: replay one candidate against the recorded common
  // feed up to its first transmission (its virtual experience matches the
  // feed exactly until then) and compare the transcripts
  {
    const Round horizon = probe_tx.empty() ? r : probe_tx.front() + 1;
    auto fresh = make_protocol();
    bool awake = false;
    Round wake_round = -2;
    size_t fi = 0;
    std::vector<Round> replay_tx;
    for (Round rr = 0; rr < horizon; ++rr) {
      bool txed = false;
      if (awake && wake_round < rr) {
        auto m = fresh->on_round_start(probe_id, rr);
        if (m) {
          replay_tx.push_back(rr);
          txed = true;
        }
      }
      while (fi < common_feed.size() && common_feed[fi].round == rr) {
        if (!txed) {  // a transmitter hears nothing in its own round
          if (!awake) {
            awake = true;
            wake_round = rr;
            fresh->on_wake(probe_id, rr, &common_feed[fi].msg);
          } else {
            fresh->on_receive(probe_id, rr, common_feed[fi].sender, common_feed[fi].msg);
          }
        }
        ++fi;
      }
    }
    std::vector<Round> probe_prefix;
    for (Round t : probe_tx)
      if (t < horizon) probe_prefix.push_back(t);
    if (replay_tx != probe_prefix)
      throw ContractError("adversary_assign_ids: nondeterministic algorithm transcript");
  }

  res.slot_ids.push_back(s_id);
  for (int c = 0; c < n_core; ++c) res.slot_ids.push_back(slot_of_core[c]);
  res.slot_ids.push_back(t_id);
  return res;
}

// End-to-end soundness check: run the same algorithm on the assigned gadget
// and report the round of t's first reception (-1 when never reached).
inline Round replay_delivery_round(const ProtocolFactory& make_protocol, const GadgetSpec& g,
                                   const SinrParams& params, const AdversaryResult& adv,
                                   Round max_rounds) {
  Network net = gadget_network(g, params, adv.slot_ids);
  auto proto = make_protocol();
  auto res = run(net, *proto, {adv.slot_ids.front()}, max_rounds);
  NodeId t_id = adv.slot_ids.back();
  auto it = res.wake_rounds.find(t_id);
  return it == res.wake_rounds.end() ? -1 : it->second;
}

}  // namespace sinrnet
