#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "sinrnet/clustering.hpp"

namespace sinrnet {

// Round-envelope constants fitted once over a sweep and frozen into the
// repository; tasks with fixed budgets (wake-up epochs, election probes)
// read them here.
struct FrozenConstants {
  double c_cluster = 2000.0;
  double c_local = 2000.0;
  double c_sms = 2000.0;
  double c_leader = 2000.0;
  double c_wake = 2500.0;
};

inline double form_cluster(int N, int64_t gamma) {
  return static_cast<double>(gamma) * std::log2(N + 1.0) * std::max(1, log_star(N));
}
inline double form_local(int N, int64_t delta) { return form_cluster(N, delta); }
inline double form_sms(int N, int64_t diameter, int64_t delta) {
  return static_cast<double>(std::max<int64_t>(1, diameter)) *
         (static_cast<double>(delta) + log_star(N)) * std::log2(N + 1.0);
}
inline double form_leader(int N, int64_t diameter, int64_t delta) {
  return form_sms(N, diameter, delta) * std::log2(N + 1.0);
}

struct BroadcastOutcome {
  Round rounds_used = 0;
  bool success = false;
  bool timeout = false;
  std::map<NodeId, bool> received_payload;
  std::map<NodeId, bool> heard_by_all_neighbors;
  std::vector<std::pair<NodeId, NodeId>> failures;  // (node, neighbor never reached)
  std::vector<std::vector<NodeId>> waves;           // L_1, L_2, ...
  std::vector<ClusterAssignment> wave_clusterings;  // after each stage 3
  std::vector<NodeId> leftover;                     // flagged inconsistencies
};

namespace detail_bcast {

inline void check_neighbor_coverage(Sim& sim, BroadcastOutcome& out,
                                    const std::set<NodeId>* restrict_to = nullptr) {
  auto g = communication_graph(sim.net());
  for (const auto& n : sim.net().nodes()) {
    if (restrict_to && !restrict_to->count(n.id)) continue;
    bool all = true;
    for (NodeId u : g.neighbors(n.id))
      if (!sim.pair_heard(n.id, u)) {
        all = false;
        out.failures.push_back({n.id, u});
      }
    out.heard_by_all_neighbors[n.id] = all;
  }
}

}  // namespace detail_bcast

// Whole-network local broadcast: cluster, label, then one schedule pass per
// label value. Success means every node was heard by each of its
// communication-graph neighbors at some round.
inline BroadcastOutcome local_broadcast(Pipeline& pipe, int64_t delta) {
  Sim& sim = pipe.sim();
  sim.wake_all();
  sim.enable_pair_tracking();
  const Round start = sim.now();
  BroadcastOutcome out;

  std::vector<NodeId> ids;
  for (const auto& n : sim.net().nodes()) ids.push_back(n.id);
  auto cr = pipe.build_clustering(delta, ids);
  out.leftover = cr.leftover;

  ParticipantSet parts;
  for (NodeId v : ids) parts.push_back({v, cr.assignment.cluster_of.at(v)});
  auto lab = pipe.imperfect_labeling(delta, parts);

  for (int64_t l = 1; l <= delta; ++l) {
    ParticipantSet pl;
    std::map<NodeId, Message> msgs;
    for (const auto& p : parts)
      if (lab.label.at(p.id) == l) {
        pl.push_back(p);
        msgs[p.id] = Message{MsgKind::Payload, p.id, p.cluster, 0, {}};
      }
    pipe.sns_pass(pl, msgs);
  }

  out.rounds_used = sim.now() - start;
  detail_bcast::check_neighbor_coverage(sim, out);
  for (NodeId v : ids) out.received_payload[v] = true;
  out.success = out.failures.empty() && out.leftover.empty();
  return out;
}

// Multi-source broadcast from sources pairwise further apart than 1 - eps.
// Wave i+1 is the set of nodes whose first payload reception happened in
// phase i; they inherit the sender's cluster (a 2-clustering) and are
// re-clustered to radius 1 before acting.
//
// probe_tag >= 0 switches to probe mode: all nodes stay awake and "joining"
// means receiving the probe payload; used by leader election.
inline BroadcastOutcome sms_broadcast(Pipeline& pipe, const std::vector<NodeId>& sources,
                                      int64_t delta, int probe_tag = -1) {
  Sim& sim = pipe.sim();
  const double eps = sim.net().params().epsilon;
  if (sources.empty()) throw ParameterError("sms_broadcast: sources must be nonempty");
  for (size_t i = 0; i < sources.size(); ++i)
    for (size_t j = i + 1; j < sources.size(); ++j)
      if (sim.net().distance(sources[i], sources[j]) <= 1.0 - eps - 1e-12)
        throw ParameterError("sms_broadcast: sources must be pairwise further than 1 - eps apart");
  const bool probe_mode = probe_tag >= 0;
  const int tag = probe_mode ? probe_tag : 0;
  if (!probe_mode) sim.enable_pair_tracking();
  for (NodeId s : sources)
    if (!sim.is_awake(s)) throw ContractError("sms_broadcast: source asleep");

  const Round start = sim.now();
  BroadcastOutcome out;

  std::set<NodeId> joined(sources.begin(), sources.end());
  std::map<NodeId, ClusterId> inherited;
  std::map<ClusterId, NodeId> centers;

  auto collect_joins = [&](const ExecLog& log, std::vector<NodeId>& wave,
                           std::map<NodeId, ClusterId>& wave_cluster) {
    std::map<NodeId, std::pair<Round, ClusterId>> first;
    for (const auto& d : log.deliveries) {
      if (d.msg.kind != MsgKind::Payload || d.msg.c != tag) continue;
      if (joined.count(d.receiver)) continue;
      auto it = first.find(d.receiver);
      if (it == first.end() || d.round < it->second.first)
        first[d.receiver] = {d.round, d.msg.b};
    }
    for (auto& [v, rc] : first) {
      joined.insert(v);
      wave.push_back(v);
      wave_cluster[v] = rc.second;
    }
  };

  // phase 1: the sources alone
  {
    ParticipantSet sp;
    std::map<NodeId, Message> msgs;
    for (NodeId s : sources) {
      sp.push_back({s, s});
      msgs[s] = Message{MsgKind::Payload, s, s, tag, {}};
      centers[s] = s;
    }
    std::sort(sp.begin(), sp.end(), [](auto& a, auto& b) { return a.id < b.id; });
    ExecLog log = pipe.sns_pass(sp, msgs);
    std::vector<NodeId> wave;
    std::map<NodeId, ClusterId> wc;
    collect_joins(log, wave, wc);
    std::sort(wave.begin(), wave.end());
    for (auto& [v, c] : wc) inherited[v] = c;
    out.waves.push_back(wave);
  }

  const Round max_phases = static_cast<Round>(sim.net().size()) + 2;
  for (Round phase = 1; phase <= max_phases; ++phase) {
    const auto& wave = out.waves.back();
    if (wave.empty()) break;

    // stage 3 of the previous phase turned the wave into a 1-clustering;
    // phase 1 waves are already clustered around the sources
    ParticipantSet parts;
    for (NodeId v : wave) parts.push_back({v, inherited.at(v)});

    // stage 1: labeling
    auto lab = pipe.imperfect_labeling(delta, parts);

    // stage 2: label-gated schedule passes; newly reached nodes join
    std::vector<NodeId> next_wave;
    std::map<NodeId, ClusterId> next_cluster;
    for (int64_t l = 1; l <= delta; ++l) {
      ParticipantSet pl;
      std::map<NodeId, Message> msgs;
      for (const auto& p : parts)
        if (lab.label.at(p.id) == l) {
          pl.push_back(p);
          msgs[p.id] = Message{MsgKind::Payload, p.id, p.cluster, tag, {}};
        }
      ExecLog log = pipe.sns_pass(pl, msgs);
      collect_joins(log, next_wave, next_cluster);
    }
    std::sort(next_wave.begin(), next_wave.end());

    // stage 3: reduce the inherited 2-clustering to radius 1
    if (!next_wave.empty()) {
      ParticipantSet np;
      for (NodeId v : next_wave) np.push_back({v, next_cluster.at(v)});
      auto rr = pipe.radius_reduction(delta, np, 2.0);
      for (NodeId v : next_wave) {
        if (rr.clustering.cluster_of.count(v))
          inherited[v] = rr.clustering.cluster_of.at(v);
        else {
          inherited[v] = next_cluster.at(v);  // flagged leftover keeps the inherited tag
          out.leftover.push_back(v);
        }
      }
      for (auto& [c, z] : rr.clustering.center_of) centers[c] = z;
      out.wave_clusterings.push_back(rr.clustering);
    }
    out.waves.push_back(next_wave);
  }

  out.rounds_used = sim.now() - start;
  bool all = true;
  for (const auto& n : sim.net().nodes()) {
    bool got = joined.count(n.id) != 0;
    out.received_payload[n.id] = got;
    if (!got) all = false;
  }
  out.timeout = !all;
  if (!probe_mode) {
    detail_bcast::check_neighbor_coverage(sim, out);
    out.success = all && out.failures.empty() && out.leftover.empty();
  } else {
    out.success = all && out.leftover.empty();
  }
  return out;
}

struct WakeUpResult {
  bool all_awake = false;
  Round first_spontaneous = -1;
  Round last_wake = -1;
  Round rounds_used = 0;  // from the first spontaneous wake to the last wake
  int epochs_run = 0;
  bool epoch_overflow = false;
  Round epoch_length = 0;
};

// Global-clock wake-up: epochs of fixed length aligned to multiples of
// T(N, delta, D); each epoch clusters the nodes awake before it and runs a
// multi-source broadcast from the surviving centers.
inline WakeUpResult wake_up(Pipeline& pipe, const std::map<NodeId, Round>& spontaneous,
                            int64_t delta, int64_t diameter_bound, const FrozenConstants& fc) {
  if (spontaneous.empty()) throw ParameterError("wake_up: need at least one spontaneous node");
  Sim& sim = pipe.sim();
  const int N = sim.net().params().id_bound;
  WakeUpResult res;
  res.epoch_length = static_cast<Round>(
      std::ceil(fc.c_wake * (form_sms(N, diameter_bound, delta) + form_cluster(N, delta))));
  for (auto& [v, r] : spontaneous)
    res.first_spontaneous =
        res.first_spontaneous < 0 ? r : std::min(res.first_spontaneous, r);

  const int max_epochs = static_cast<int>(sim.net().size()) + 2;
  for (int m = 0; m < max_epochs; ++m) {
    const Round epoch_start = m * res.epoch_length;
    for (auto& [v, r] : spontaneous)
      if (r < epoch_start) sim.wake(v, r);
    auto awake = sim.awake_ids();
    if (sim.awake_count() == sim.net().size()) break;
    if (awake.empty()) {
      sim.skip_rounds(epoch_start + res.epoch_length - sim.now());
      continue;
    }
    if (sim.now() < epoch_start) sim.skip_rounds(epoch_start - sim.now());
    ++res.epochs_run;

    auto cr = pipe.build_clustering(delta, awake);
    std::vector<NodeId> survivors;
    for (auto& [c, z] : cr.assignment.center_of)
      if (std::find(awake.begin(), awake.end(), z) != awake.end()) survivors.push_back(z);
    std::sort(survivors.begin(), survivors.end());
    survivors.erase(std::unique(survivors.begin(), survivors.end()), survivors.end());
    sms_broadcast(pipe, survivors, delta);

    if (sim.now() > epoch_start + res.epoch_length)
      res.epoch_overflow = true;
    else
      sim.skip_rounds(epoch_start + res.epoch_length - sim.now());
  }
  for (auto& [v, r] : spontaneous) sim.wake(v, r);

  res.all_awake = sim.awake_count() == sim.net().size();
  for (const auto& n : sim.net().nodes())
    if (sim.is_awake(n.id))
      res.last_wake = std::max(res.last_wake, std::max<Round>(sim.wake_round(n.id),
                                                              res.first_spontaneous));
  res.rounds_used = res.last_wake - res.first_spontaneous;
  return res;
}

struct LeaderResult {
  NodeId leader = -1;
  bool unanimous = false;
  std::map<NodeId, NodeId> per_node;  // each node's conclusion
  std::vector<NodeId> survivor_set;   // the constant-density candidate set
  Round rounds_used = 0;
  bool probe_overflow = false;
};

// Leader election via binary search over ID ranges; each probe runs a
// fixed-budget multi-source broadcast from the candidate centers in the
// range, whose delivery (or silence) every node observes.
inline LeaderResult leader_election(Pipeline& pipe, int64_t delta, int64_t diameter_bound,
                                    const FrozenConstants& fc) {
  Sim& sim = pipe.sim();
  if (sim.net().size() == 0) throw ParameterError("leader_election: empty network");
  sim.wake_all();
  const int N = sim.net().params().id_bound;
  const Round start = sim.now();
  LeaderResult res;

  std::vector<NodeId> ids;
  for (const auto& n : sim.net().nodes()) ids.push_back(n.id);
  auto cr = pipe.build_clustering(delta, ids);
  std::set<NodeId> survivors;
  for (auto& [c, z] : cr.assignment.center_of) survivors.insert(z);
  res.survivor_set.assign(survivors.begin(), survivors.end());

  const Round probe_budget =
      static_cast<Round>(std::ceil(fc.c_sms * form_sms(N, diameter_bound, delta))) + 16;

  std::map<NodeId, std::pair<int, int>> view;  // per-node binary search state
  for (NodeId v : ids) view[v] = {1, N};
  int lo = 1, hi = N;
  int probe_no = 0;
  while (lo < hi) {
    int mid = lo + (hi - lo) / 2;
    std::vector<NodeId> sset;
    for (NodeId s : res.survivor_set)
      if (s >= lo && s <= mid) sset.push_back(s);
    const Round probe_start = sim.now();
    std::map<NodeId, bool> observed;
    if (sset.empty()) {
      sim.skip_rounds(probe_budget);
      for (NodeId v : ids) observed[v] = false;
    } else {
      auto probe = sms_broadcast(pipe, sset, delta, /*probe_tag=*/100 + probe_no);
      for (NodeId v : ids)
        observed[v] = probe.received_payload.at(v) ||
                      std::find(sset.begin(), sset.end(), v) != sset.end();
      if (sim.now() - probe_start > probe_budget)
        res.probe_overflow = true;
      else
        sim.skip_rounds(probe_budget - (sim.now() - probe_start));
    }
    for (NodeId v : ids) {
      auto& [l, h] = view[v];
      if (l >= h) continue;
      if (observed[v])
        h = (l + h) / 2;
      else
        l = (l + h) / 2 + 1;
    }
    if (sset.empty())
      lo = mid + 1;
    else
      hi = mid;
    ++probe_no;
  }
  for (NodeId v : ids) res.per_node[v] = view[v].first;
  res.leader = lo;
  res.unanimous = true;
  for (auto& [v, x] : res.per_node)
    if (x != res.leader) res.unanimous = false;
  res.rounds_used = sim.now() - start;
  return res;
}

}  // namespace sinrnet
