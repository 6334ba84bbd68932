#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <vector>

#include "sinrnet/engine.hpp"

namespace sinrnet {

// Effective schedule parameters for pipeline runs. The paper-faithful
// constants from derive_constants are far too large to simulate; these are
// the operational values, overridable from the CLI, validated by the
// oracle-checked suites.
struct RunConfig {
  int kappa = 6;     // candidate cap / wss-wcss selection parameter
  int rho = 3;       // wcss conflict parameter
  int sns_k = 10;    // ssf parameter of the sparse-network schedule
  double len_scale = 1.0;
  uint64_t seed = 0x51e3c0de;

  int64_t wss_len(int N) const {
    return std::max<int64_t>(32, static_cast<int64_t>(
        std::ceil(len_scale * 2.0 * kappa * kappa * std::log2(N + 1.0))));
  }
  int64_t wcss_len(int N) const {
    return std::max<int64_t>(32, static_cast<int64_t>(
        std::ceil(len_scale * 2.0 * kappa * kappa * rho * std::log2(N + 1.0))));
  }
  int64_t sns_len(int N) const {
    return std::max<int64_t>(32, static_cast<int64_t>(
        std::ceil(len_scale * 2.0 * sns_k * sns_k * std::log2(N + 1.0))));
  }
};

class ScheduleCache {
 public:
  const Schedule& get(ScheduleKind kind, int N, int k, int l, int64_t len, uint64_t seed) {
    auto key = std::make_tuple(static_cast<int>(kind), N, k, l, len, seed);
    auto it = store_.find(key);
    if (it != store_.end()) return it->second;
    Schedule s;
    switch (kind) {
      case ScheduleKind::Ssf: s = build_ssf(N, k, seed, len); break;
      case ScheduleKind::Wss: s = build_wss(N, k, seed, len); break;
      case ScheduleKind::Wcss: s = build_wcss(N, k, l, seed, len); break;
      default: throw ContractError("ScheduleCache: explicit schedules are not built");
    }
    return store_.emplace(key, std::move(s)).first->second;
  }

 private:
  std::map<std::tuple<int, int, int, int, int64_t, uint64_t>, Schedule> store_;
};

using AdjMap = std::map<NodeId, std::vector<NodeId>>;

struct ProxGraph {
  AdjMap adj;                          // mutual edges only
  std::map<NodeId, std::vector<NodeId>> candidates;  // C_v after filtering
  const Schedule* sched = nullptr;
  ParticipantSet parts;
};

struct AttachEvent {
  NodeId child = -1;
  NodeId parent = -1;
};

struct SparsifyIter {
  ParticipantSet parts;  // active set at the exchange
  std::vector<AttachEvent> attaches;
};

struct SparsifyResult {
  std::vector<NodeId> input;
  std::vector<NodeId> retained;
  std::map<NodeId, NodeId> parent;
  std::map<NodeId, std::vector<NodeId>> children;
  std::vector<SparsifyIter> iters;
  const Schedule* sched = nullptr;

  bool barren() const { return parent.empty() && retained == input; }
};

struct FullSparsifyResult {
  std::vector<std::vector<NodeId>> levels;  // retained cascade A_0, A_1, ...
  std::vector<SparsifyResult> stages;
  int declared_stages = 0;
};

struct Labeling {
  std::map<NodeId, int> label;
  int max_multiplicity = 0;
  int max_trees_per_cluster = 0;
  FullSparsifyResult fs;
};

struct RadiusReductionResult {
  ClusterAssignment clustering;
  std::vector<NodeId> leftover;  // unassigned after all iterations (flagged)
  int iterations_run = 0;
};

struct ClusteringResult {
  ClusterAssignment assignment;
  std::vector<NodeId> leftover;
};

namespace detail_pipeline {

inline bool is_prime(int64_t n) {
  if (n < 2) return false;
  for (int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline int64_t next_prime(int64_t n) {
  while (!is_prime(n)) ++n;
  return n;
}

inline std::vector<NodeId> ids_of(const ParticipantSet& parts) {
  std::vector<NodeId> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(p.id);
  return out;
}

inline ParticipantSet subset(const ParticipantSet& parts, const std::set<NodeId>& keep) {
  ParticipantSet out;
  for (const auto& p : parts)
    if (keep.count(p.id)) out.push_back(p);
  return out;
}

}  // namespace detail_pipeline

// Drives the algorithm stack over one simulation. All decisions are
// functions of ids, rounds and received messages; positions are only
// touched by the physical layer inside Sim.
class Pipeline {
 public:
  Pipeline(Sim& sim, RunConfig cfg, ScheduleCache& cache)
      : sim_(&sim), cfg_(cfg), cache_(&cache), N_(sim.net().params().id_bound) {}

  Sim& sim() { return *sim_; }
  const RunConfig& cfg() const { return cfg_; }

  const Schedule& wss() { return cache_->get(ScheduleKind::Wss, N_, cfg_.kappa, 0, cfg_.wss_len(N_), cfg_.seed); }
  const Schedule& wcss() {
    return cache_->get(ScheduleKind::Wcss, N_, cfg_.kappa, cfg_.rho, cfg_.wcss_len(N_), cfg_.seed + 1);
  }
  const Schedule& sns() { return cache_->get(ScheduleKind::Ssf, N_, cfg_.sns_k, 0, cfg_.sns_len(N_), cfg_.seed + 2); }

  // One sparse-network-schedule pass; every participant announces (id,
  // cluster) or a caller-supplied message.
  ExecLog sns_pass(const ParticipantSet& parts, const std::map<NodeId, Message>& msgs) {
    return sim_->run_schedule(sns(), parts, msgs);
  }
  ExecLog sns_pass(const ParticipantSet& parts) {
    std::map<NodeId, Message> msgs;
    for (const auto& p : parts) msgs[p.id] = Message{MsgKind::Announce, p.id, p.cluster, 0, {}};
    return sns_pass(parts, msgs);
  }

  // --- proximity graph (exchange, filtering, confirmation) ---------------
  ProxGraph proximity_graph(const ParticipantSet& parts, bool clustered) {
    ProxGraph pg;
    pg.sched = clustered ? &wcss() : &wss();
    pg.parts = parts;
    if (parts.empty()) return pg;

    std::map<NodeId, ClusterId> cluster_of;
    for (const auto& p : parts) cluster_of[p.id] = p.cluster;

    std::map<NodeId, Message> msgs;
    for (const auto& p : parts) msgs[p.id] = Message{MsgKind::Announce, p.id, p.cluster, 0, {}};
    ExecLog ex = sim_->run_schedule(*pg.sched, parts, msgs);

    // receptions per participant, same-cluster only in clustered mode
    std::map<NodeId, std::set<NodeId>> heard;
    std::map<NodeId, std::vector<std::pair<Round, NodeId>>> heard_rounds;
    for (const auto& d : ex.deliveries) {
      if (!cluster_of.count(d.receiver)) continue;
      if (clustered && cluster_of[d.sender] != cluster_of[d.receiver]) continue;
      heard[d.receiver].insert(d.sender);
      heard_rounds[d.receiver].push_back({d.round, d.sender});
    }
    // filtering: drop w from C_v when v heard someone else in a round where
    // w was transmitting
    std::map<Round, const std::vector<NodeId>*> tx_at;
    for (const auto& [r, ids] : ex.tx_rounds) tx_at[r] = &ids;
    for (const auto& p : parts) {
      auto hit = heard.find(p.id);
      if (hit == heard.end()) continue;
      std::set<NodeId> cand = hit->second;
      for (auto [r, u] : heard_rounds[p.id]) {
        const auto& txs = *tx_at.at(r);
        for (NodeId w : txs)
          if (w != u) cand.erase(w);
      }
      if (static_cast<int>(cand.size()) > cfg_.kappa) cand.clear();
      if (!cand.empty())
        pg.candidates[p.id] = std::vector<NodeId>(cand.begin(), cand.end());
    }
    // confirmation: |C_v| repetitions, one candidate per repetition
    size_t reps = 0;
    for (auto& [v, c] : pg.candidates) reps = std::max(reps, c.size());
    std::map<NodeId, std::set<NodeId>> confirmed;  // u -> {w : u received <w,u>}
    for (size_t j = 0; j < reps; ++j) {
      ParticipantSet pj;
      std::map<NodeId, Message> mj;
      for (const auto& p : parts) {
        auto it = pg.candidates.find(p.id);
        if (it == pg.candidates.end() || it->second.size() <= j) continue;
        pj.push_back(p);
        mj[p.id] = Message{MsgKind::Confirm, p.id, it->second[j], 0, {}};
      }
      ExecLog cl = sim_->run_schedule(*pg.sched, pj, mj);
      for (const auto& d : cl.deliveries) {
        if (d.msg.kind != MsgKind::Confirm) continue;
        if (d.msg.b == d.receiver && cluster_of.count(d.receiver)) {
          auto cit = pg.candidates.find(d.receiver);
          if (cit != pg.candidates.end() &&
              std::binary_search(cit->second.begin(), cit->second.end(), d.msg.a))
            confirmed[d.receiver].insert(d.msg.a);
        }
      }
    }
    for (const auto& [v, evs] : confirmed)
      for (NodeId w : evs)
        if (confirmed.count(w) && confirmed.at(w).count(v) && v < w) {
          pg.adj[v].push_back(w);
          pg.adj[w].push_back(v);
        }
    for (auto& [v, nb] : pg.adj) std::sort(nb.begin(), nb.end());
    return pg;
  }

  // --- deterministic LOCAL-model MIS over schedule replays ----------------
  // Iterated polynomial color reduction from the ID-coloring down to
  // O(deg^2) colors, then a greedy sweep over the color classes. Each LOCAL
  // round costs one execution of the exchange schedule.
  std::vector<NodeId> mis_local(const AdjMap& adj, const Schedule& sched, const ParticipantSet& parts) {
    std::vector<NodeId> vertices;
    int deg = 1;
    for (const auto& [v, nb] : adj) {
      vertices.push_back(v);
      deg = std::max(deg, static_cast<int>(nb.size()));
    }
    if (vertices.empty()) return {};

    std::map<NodeId, ClusterId> cluster_of;
    for (const auto& p : parts) cluster_of[p.id] = p.cluster;

    std::map<NodeId, int64_t> color;
    for (NodeId v : vertices) color[v] = v;
    int64_t space = N_ + 1;

    while (true) {
      // smallest prime field giving q > deg*D and q^(D+1) >= space
      int64_t best_q = -1;
      int best_d = 1;
      for (int D = 1; D <= 8; ++D) {
        int64_t q0 = std::max<int64_t>(static_cast<int64_t>(deg) * D + 1, 2);
        int64_t q = detail_pipeline::next_prime(q0);
        while (true) {
          int64_t pw = 1;
          bool ok = false;
          for (int e = 0; e <= D; ++e) {
            pw *= q;
            if (pw >= space) { ok = true; break; }
          }
          if (ok) break;
          q = detail_pipeline::next_prime(q + 1);
        }
        if (best_q < 0 || q * q < best_q * best_q) {
          best_q = q;
          best_d = D;
        }
      }
      if (best_q * best_q >= space) break;  // no further shrink
      const int64_t q = best_q;
      const int D = best_d;

      // one LOCAL round: broadcast colors, then recolor
      ParticipantSet vp = detail_pipeline::subset(parts, {vertices.begin(), vertices.end()});
      std::map<NodeId, Message> msgs;
      for (NodeId v : vertices)
        msgs[v] = Message{MsgKind::Color, v, static_cast<int32_t>(color[v]), 0, {}};
      ExecLog log = sim_->run_schedule(sched, vp, msgs);
      std::map<NodeId, std::map<NodeId, int64_t>> nb_color;
      for (const auto& d : log.deliveries)
        if (d.msg.kind == MsgKind::Color) nb_color[d.receiver][d.msg.a] = d.msg.b;

      std::map<NodeId, int64_t> next;
      for (NodeId v : vertices) {
        // coefficients of the node's color polynomial over F_q
        std::vector<int64_t> coeff(D + 1);
        int64_t c = color[v];
        for (int e = 0; e <= D; ++e) {
          coeff[e] = c % q;
          c /= q;
        }
        auto eval = [&](int64_t cc, int64_t x) {
          std::vector<int64_t> cf(D + 1);
          for (int e = 0; e <= D; ++e) {
            cf[e] = cc % q;
            cc /= q;
          }
          int64_t acc = 0;
          for (int e = D; e >= 0; --e) acc = (acc * x + cf[e]) % q;
          return acc;
        };
        int64_t chosen = -1;
        for (int64_t x = 0; x < q && chosen < 0; ++x) {
          bool good = true;
          int64_t own = 0;
          for (int e = D; e >= 0; --e) own = (own * x + coeff[e]) % q;
          for (NodeId u : adj.at(v)) {
            auto it = nb_color[v].find(u);
            if (it == nb_color[v].end())
              throw ContractError("mis_local: neighbor color not delivered");
            if (eval(it->second, x) == own) {
              good = false;
              break;
            }
          }
          if (good) chosen = x * q + own;
        }
        if (chosen < 0) throw ContractError("mis_local: no collision-free evaluation point");
        next[v] = chosen;
      }
      color = std::move(next);
      space = q * q;
    }

    // greedy sweep: class by class, join unless a neighbor already joined
    std::set<NodeId> mis, dominated;
    for (int64_t c = 0; c < space; ++c) {
      std::vector<NodeId> joiners;
      for (NodeId v : vertices)
        if (color[v] == c && !mis.count(v) && !dominated.count(v)) joiners.push_back(v);
      if (joiners.empty()) {
        sim_->skip_rounds(static_cast<Round>(sched.length()));
        continue;
      }
      ParticipantSet jp = detail_pipeline::subset(parts, {joiners.begin(), joiners.end()});
      std::map<NodeId, Message> msgs;
      for (NodeId v : joiners) msgs[v] = Message{MsgKind::MisJoin, v, 0, 0, {}};
      ExecLog log = sim_->run_schedule(sched, jp, msgs);
      for (NodeId v : joiners) mis.insert(v);
      for (const auto& d : log.deliveries)
        if (d.msg.kind == MsgKind::MisJoin && adj.count(d.receiver) &&
            std::binary_search(adj.at(d.receiver).begin(), adj.at(d.receiver).end(), d.msg.a))
          dominated.insert(d.receiver);
    }
    return {mis.begin(), mis.end()};
  }

  // --- sparsification (one pass) ------------------------------------------
  SparsifyResult sparsify(int64_t gamma, const ParticipantSet& parts, bool clustered) {
    SparsifyResult res;
    res.input = detail_pipeline::ids_of(parts);
    res.sched = clustered ? &wcss() : &wss();
    ParticipantSet active = parts;
    std::set<NodeId> prnts;

    for (int64_t it = 0; it < gamma && !active.empty(); ++it) {
      ProxGraph pg = proximity_graph(active, clustered);
      std::vector<NodeId> ind;
      if (clustered) {
        for (const auto& p : active) {
          auto ait = pg.adj.find(p.id);
          if (ait == pg.adj.end() || ait->second.empty() || p.id < ait->second.front())
            ind.push_back(p.id);  // local minimum (isolated nodes qualify)
        }
      } else {
        AdjMap full;
        for (const auto& p : active) full[p.id] = pg.adj.count(p.id) ? pg.adj[p.id] : std::vector<NodeId>{};
        ind = mis_local(full, *pg.sched, active);
      }
      std::set<NodeId> y(ind.begin(), ind.end());

      SparsifyIter iter;
      iter.parts = active;
      for (const auto& p : active) {
        if (y.count(p.id)) continue;
        auto ait = pg.adj.find(p.id);
        if (ait == pg.adj.end()) continue;
        NodeId chosen = -1;
        for (NodeId u : ait->second)
          if (y.count(u)) {
            chosen = u;
            break;
          }  // adjacency sorted: smallest qualifying id
        if (chosen >= 0) iter.attaches.push_back({p.id, chosen});
      }
      if (iter.attaches.empty()) break;  // fixpoint: later iterations repeat verbatim

      // children claim their parents over one more execution of the schedule
      std::set<NodeId> chl;
      std::map<NodeId, Message> cm;
      for (const auto& a : iter.attaches) {
        chl.insert(a.child);
        cm[a.child] = Message{MsgKind::ParentClaim, a.child, a.parent, 0, {}};
      }
      ExecLog claim = sim_->run_schedule(*res.sched, detail_pipeline::subset(active, chl), cm);
      std::set<std::pair<NodeId, NodeId>> delivered;
      for (const auto& d : claim.deliveries)
        if (d.msg.kind == MsgKind::ParentClaim && d.msg.b == d.receiver)
          delivered.insert({d.msg.a, d.receiver});
      for (const auto& a : iter.attaches) {
        if (!delivered.count({a.child, a.parent}))
          throw ContractError("sparsify: parent claim not delivered");
        res.parent[a.child] = a.parent;
        res.children[a.parent].push_back(a.child);
        prnts.insert(a.parent);
      }
      std::set<NodeId> removed = chl;
      for (const auto& a : iter.attaches) removed.insert(a.parent);
      ParticipantSet next;
      for (const auto& p : active)
        if (!removed.count(p.id)) next.push_back(p);
      active = std::move(next);
      res.iters.push_back(std::move(iter));
    }

    std::set<NodeId> keep;
    for (const auto& p : active) keep.insert(p.id);
    keep.insert(prnts.begin(), prnts.end());
    res.retained.assign(keep.begin(), keep.end());
    for (auto& [p, ch] : res.children) std::sort(ch.begin(), ch.end());
    return res;
  }

  // --- chained unclustered sparsification ---------------------------------
  struct UnclusteredResult {
    std::vector<std::vector<NodeId>> sets;  // X_0 .. X_m (m <= declared l)
    std::vector<SparsifyResult> stages;
    int64_t declared_l = 0;
  };

  UnclusteredResult sparsify_unclustered(int64_t gamma, const std::vector<NodeId>& ids) {
    UnclusteredResult out;
    out.declared_l = packing_bound(5.0, 1.0 - sim_->net().params().epsilon);
    out.sets.push_back(ids);
    ParticipantSet cur = to_participants(ids);
    for (int64_t i = 0; i < out.declared_l; ++i) {
      SparsifyResult res = sparsify(gamma, cur, false);
      if (res.barren()) break;  // identical from here on
      out.sets.push_back(res.retained);
      cur = to_participants(res.retained);
      out.stages.push_back(std::move(res));
    }
    return out;
  }

  // --- full sparsification (geometrically decreasing density target) ------
  FullSparsifyResult full_sparsify(int64_t gamma, const ParticipantSet& parts) {
    FullSparsifyResult out;
    out.declared_stages =
        gamma <= 1 ? 0 : static_cast<int>(std::ceil(std::log(static_cast<double>(gamma)) / std::log(4.0 / 3.0)));
    out.levels.push_back(detail_pipeline::ids_of(parts));
    ParticipantSet cur = parts;
    int64_t lambda = gamma;
    for (int i = 1; i <= out.declared_stages; ++i) {
      SparsifyResult res = sparsify(lambda, cur, true);
      bool barren = res.barren();
      out.levels.push_back(res.retained);
      std::set<NodeId> keep(res.retained.begin(), res.retained.end());
      cur = detail_pipeline::subset(cur, keep);
      out.stages.push_back(std::move(res));
      if (barren) break;  // one barren pass implies all remaining are
      lambda = (3 * lambda + 3) / 4;
    }
    return out;
  }

  // --- imperfect labeling over the sparsification forest ------------------
  Labeling imperfect_labeling(int64_t gamma, const ParticipantSet& parts) {
    Labeling lab;
    lab.fs = full_sparsify(gamma, parts);
    const auto& fs = lab.fs;

    std::map<NodeId, ClusterId> cluster_of;
    for (const auto& p : parts) cluster_of[p.id] = p.cluster;

    // subtree sizes travel bottom-up, one replay per recorded iteration
    std::map<NodeId, int> size;
    for (const auto& p : parts) size[p.id] = 1;
    for (const auto& stage : fs.stages) {
      for (const auto& iter : stage.iters) {
        if (iter.attaches.empty()) continue;
        std::set<NodeId> chl;
        std::map<NodeId, Message> msgs;
        for (const auto& a : iter.attaches) {
          chl.insert(a.child);
          msgs[a.child] = Message{MsgKind::SubtreeSize, a.child, size[a.child], 0, {}};
        }
        ExecLog log = sim_->run_schedule(*stage.sched, detail_pipeline::subset(iter.parts, chl), msgs);
        std::set<std::pair<NodeId, NodeId>> seen;
        for (const auto& d : log.deliveries)
          if (d.msg.kind == MsgKind::SubtreeSize) seen.insert({d.msg.a, d.receiver});
        for (const auto& a : iter.attaches) {
          if (!seen.count({a.child, a.parent}))
            throw ContractError("imperfect_labeling: size report not delivered");
          size[a.parent] += size[a.child];
        }
      }
    }

    // range assignment travels top-down in reverse order; every node takes
    // the start of its range as its label and splits the rest among its
    // children in id order
    std::map<NodeId, int> lo;
    for (NodeId r : fs.levels.back()) lo[r] = 1;
    auto child_offsets = [&](NodeId parent_id, const std::vector<NodeId>& kids) {
      std::map<NodeId, int> ofs;
      int cursor = lo.at(parent_id) + 1;
      for (NodeId c : kids) {
        ofs[c] = cursor;
        cursor += size.at(c);
      }
      return ofs;
    };
    std::map<NodeId, std::vector<NodeId>> all_children;
    for (const auto& stage : fs.stages)
      for (const auto& [p, ch] : stage.children)
        for (NodeId c : ch) all_children[p].push_back(c);
    for (auto& [p, ch] : all_children) std::sort(ch.begin(), ch.end());

    for (auto sit = fs.stages.rbegin(); sit != fs.stages.rend(); ++sit) {
      for (auto iit = sit->iters.rbegin(); iit != sit->iters.rend(); ++iit) {
        if (iit->attaches.empty()) continue;
        std::map<NodeId, std::vector<NodeId>> by_parent;
        for (const auto& a : iit->attaches) by_parent[a.parent].push_back(a.child);
        std::set<NodeId> senders;
        std::map<NodeId, Message> msgs;
        for (auto& [p, kids] : by_parent) {
          auto ofs = child_offsets(p, all_children.at(p));
          Message m{MsgKind::RangeAssign, p, 0, 0, {}};
          std::sort(kids.begin(), kids.end());
          for (NodeId c : kids) m.ranges.push_back({c, ofs.at(c)});
          senders.insert(p);
          msgs[p] = std::move(m);
        }
        ExecLog log = sim_->run_schedule(*sit->sched, detail_pipeline::subset(iit->parts, senders), msgs);
        std::set<NodeId> got;
        for (const auto& d : log.deliveries)
          if (d.msg.kind == MsgKind::RangeAssign)
            for (const auto& e : d.msg.ranges)
              if (e.child == d.receiver) {
                lo[d.receiver] = e.lo;
                got.insert(d.receiver);
              }
        for (const auto& a : iit->attaches)
          if (!got.count(a.child))
            throw ContractError("imperfect_labeling: range not delivered");
      }
    }

    for (const auto& p : parts) lab.label[p.id] = lo.at(p.id);

    std::map<ClusterId, std::map<int, int>> mult;
    std::map<ClusterId, int> trees;
    for (NodeId r : fs.levels.back()) trees[cluster_of[r]]++;
    for (const auto& p : parts) mult[p.cluster][lab.label[p.id]]++;
    for (auto& [c, bylab] : mult)
      for (auto& [l, k] : bylab) lab.max_multiplicity = std::max(lab.max_multiplicity, k);
    for (auto& [c, k] : trees) lab.max_trees_per_cluster = std::max(lab.max_trees_per_cluster, k);
    return lab;
  }

  // --- radius reduction ----------------------------------------------------
  RadiusReductionResult radius_reduction(int64_t gamma, const ParticipantSet& parts, double r) {
    RadiusReductionResult out;
    const double eps = sim_->net().params().epsilon;
    const int64_t budget = packing_bound(r + 1.0, 1.0 - eps);
    ParticipantSet rest = parts;

    for (int64_t i = 0; i < budget && !rest.empty(); ++i) {
      ++out.iterations_run;
      FullSparsifyResult fs = full_sparsify(gamma, rest);
      const auto& ak = fs.levels.back();
      ParticipantSet akp = detail_pipeline::subset(rest, {ak.begin(), ak.end()});

      ExecLog ex = sns_pass(akp);
      std::map<NodeId, std::set<NodeId>> heard;
      for (const auto& d : ex.deliveries)
        if (std::binary_search(ak.begin(), ak.end(), d.receiver)) heard[d.receiver].insert(d.sender);
      AdjMap g;
      for (NodeId v : ak)
        for (NodeId u : ak) {
          if (u <= v) continue;
          if (heard.count(v) && heard[v].count(u) && heard.count(u) && heard[u].count(v)) {
            g[v].push_back(u);
            g[u].push_back(v);
          }
        }
      for (auto& [v, nb] : g) std::sort(nb.begin(), nb.end());
      std::vector<NodeId> isolated;
      for (NodeId v : ak)
        if (!g.count(v)) isolated.push_back(v);  // exchange-isolated: self-dominating

      std::vector<NodeId> d_set = mis_local(g, sns(), akp);
      d_set.insert(d_set.end(), isolated.begin(), isolated.end());
      std::sort(d_set.begin(), d_set.end());

      std::map<NodeId, Message> dm;
      for (NodeId d : d_set) dm[d] = Message{MsgKind::ClusterTag, d, d, 0, {}};
      ExecLog announce = sim_->run_schedule(sns(), detail_pipeline::subset(rest, {d_set.begin(), d_set.end()}), dm);

      std::map<NodeId, NodeId> adopted;
      std::set<NodeId> rest_ids;
      for (const auto& p : rest) rest_ids.insert(p.id);
      for (const auto& d : announce.deliveries) {
        if (d.msg.kind != MsgKind::ClusterTag || !rest_ids.count(d.receiver)) continue;
        auto it = adopted.find(d.receiver);
        if (it == adopted.end() || d.msg.a < it->second) adopted[d.receiver] = d.msg.a;
      }
      for (NodeId d : d_set) {
        out.clustering.cluster_of[d] = d;
        out.clustering.center_of[d] = d;
      }
      std::set<NodeId> done(d_set.begin(), d_set.end());
      for (auto& [v, c] : adopted)
        if (!done.count(v)) {
          out.clustering.cluster_of[v] = c;
          done.insert(v);
        }
      ParticipantSet next;
      for (const auto& p : rest)
        if (!done.count(p.id)) next.push_back(p);
      rest = std::move(next);
    }
    out.leftover = detail_pipeline::ids_of(rest);
    return out;
  }

  // --- clustering of an unclustered set ------------------------------------
  ClusteringResult build_clustering(int64_t gamma, const std::vector<NodeId>& ids) {
    ClusteringResult out;
    if (ids.empty()) return out;
    const int stages_k =
        gamma <= 1 ? 0 : static_cast<int>(std::ceil(std::log(static_cast<double>(gamma)) / std::log(4.0 / 3.0)));

    struct FlatStage {
      SparsifyResult stage;
      int64_t lambda;
    };
    std::vector<FlatStage> flat;
    std::vector<NodeId> x = ids;
    int64_t lambda = gamma;
    for (int i = 1; i <= stages_k; ++i) {
      auto ur = sparsify_unclustered(lambda, x);
      bool progressed = !ur.stages.empty();
      for (auto& st : ur.stages) flat.push_back({std::move(st), lambda});
      if (!ur.sets.empty()) x = ur.sets.back();
      lambda = (3 * lambda + 3) / 4;
      if (!progressed) break;  // barren at this density: smaller targets change nothing
    }

    // seed clustering on the final survivor set; if survivors are still
    // mutually close (small-density stall), one radius-reduction pass over
    // singleton clusters restores validity
    ClusterAssignment cur;
    for (NodeId v : x) {
      cur.cluster_of[v] = v;
      cur.center_of[v] = v;
    }
    {
      const double eps = sim_->net().params().epsilon;
      bool spaced = true;
      for (size_t a = 0; a < x.size() && spaced; ++a)
        for (size_t b = a + 1; b < x.size() && spaced; ++b)
          if (sim_->net().distance(x[a], x[b]) < 1.0 - eps - 1e-12) spaced = false;
      if (!spaced) {
        ParticipantSet seed;
        for (NodeId v : x) seed.push_back({v, v});
        auto rr = radius_reduction(std::max<int64_t>(2, lambda), seed, 1.0);
        ClusterAssignment next = rr.clustering;
        for (NodeId v : rr.leftover) {  // flagged, but keep them addressable
          next.cluster_of[v] = cur.cluster_of.at(v);
          next.center_of[cur.cluster_of.at(v)] = cur.center_of.at(cur.cluster_of.at(v));
          out.leftover.push_back(v);
        }
        cur = std::move(next);
      }
    }

    // backward pass: push clusters down each recorded stage, then reduce
    for (auto it = flat.rbegin(); it != flat.rend(); ++it) {
      const SparsifyResult& st = it->stage;
      for (const auto& iter : st.iters) {
        if (iter.attaches.empty()) continue;
        std::map<NodeId, std::vector<NodeId>> by_parent;
        for (const auto& a : iter.attaches) by_parent[a.parent].push_back(a.child);
        std::set<NodeId> senders;
        std::map<NodeId, Message> msgs;
        for (auto& [p, kids] : by_parent) {
          senders.insert(p);
          msgs[p] = Message{MsgKind::ClusterTag, p, cur.cluster_of.at(p), 0, {}};
        }
        ExecLog log = sim_->run_schedule(*st.sched, detail_pipeline::subset(iter.parts, senders), msgs);
        std::map<NodeId, NodeId> parent_of;
        for (const auto& a : iter.attaches) parent_of[a.child] = a.parent;
        std::set<NodeId> got;
        for (const auto& d : log.deliveries)
          if (d.msg.kind == MsgKind::ClusterTag && parent_of.count(d.receiver) &&
              parent_of[d.receiver] == d.msg.a) {
            cur.cluster_of[d.receiver] = d.msg.b;
            got.insert(d.receiver);
          }
        for (const auto& a : iter.attaches)
          if (!got.count(a.child)) throw ContractError("build_clustering: cluster push not delivered");
      }
      // the stage's input set is now 2-clustered; reduce back to radius 1
      ParticipantSet xp;
      for (NodeId v : st.input) xp.push_back({v, cur.cluster_of.at(v)});
      auto rr = radius_reduction(std::max<int64_t>(2, it->lambda), xp, 2.0);
      ClusterAssignment next = rr.clustering;
      for (NodeId v : rr.leftover) {  // flagged, but keep them addressable
        NodeId c = cur.cluster_of.at(v);
        next.cluster_of[v] = c;
        if (cur.center_of.count(c)) next.center_of[c] = cur.center_of.at(c);
        out.leftover.push_back(v);
      }
      cur = std::move(next);
    }
    out.assignment = std::move(cur);
    std::sort(out.leftover.begin(), out.leftover.end());
    out.leftover.erase(std::unique(out.leftover.begin(), out.leftover.end()), out.leftover.end());
    return out;
  }

 private:
  Sim* sim_;
  RunConfig cfg_;
  ScheduleCache* cache_;
  int N_;
};

}  // namespace sinrnet
