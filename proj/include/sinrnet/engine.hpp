#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "sinrnet/common.hpp"
#include "sinrnet/selectors.hpp"
#include "sinrnet/sinr.hpp"

namespace sinrnet {

// Message payloads are a tagged record with a handful of integer fields,
// which keeps every message O(log N) bits by construction. `ranges` is only
// populated for label-range assignments and is bounded by the candidate cap.
enum class MsgKind : uint8_t {
  None,
  Announce,     // a = own id, b = cluster
  Confirm,      // a = own id, b = confirmed candidate
  ParentClaim,  // a = child, b = chosen parent
  SubtreeSize,  // a = own id, b = accumulated size
  RangeAssign,  // a = own id; ranges = (child, range start)
  ClusterTag,   // a = own id, b = cluster id
  Color,        // a = own id, b = color
  MisJoin,      // a = own id
  Payload,      // a = origin id, b = tag
};

struct RangeEntry {
  NodeId child = -1;
  int32_t lo = 0;
};

struct Message {
  MsgKind kind = MsgKind::None;
  NodeId a = -1;
  int32_t b = -1;
  int32_t c = 0;
  std::vector<RangeEntry> ranges;
};

struct RoundTrace {
  Round round = 0;
  std::vector<NodeId> transmitters;
  std::vector<ReceptionEvent> receptions;
};

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void on_round(const RoundTrace& t) = 0;
};

struct CollectSink : TraceSink {
  std::vector<RoundTrace> traces;
  void on_round(const RoundTrace& t) override { traces.push_back(t); }
};

struct Participant {
  NodeId id = -1;
  ClusterId cluster = 1;
};

using ParticipantSet = std::vector<Participant>;  // kept sorted by id

inline ParticipantSet to_participants(const std::vector<NodeId>& ids, ClusterId cluster = 1) {
  ParticipantSet p;
  p.reserve(ids.size());
  for (NodeId v : ids) p.push_back({v, cluster});
  std::sort(p.begin(), p.end(), [](auto& a, auto& b) { return a.id < b.id; });
  return p;
}

struct Delivery {
  Round round = 0;  // global round number
  NodeId receiver = -1;
  NodeId sender = -1;
  Message msg;
};

struct ExecLog {
  Round start_round = 0;
  Round length = 0;
  std::vector<Delivery> deliveries;
  // transmitters per non-silent round, as (global round, sorted ids)
  std::vector<std::pair<Round, std::vector<NodeId>>> tx_rounds;

  bool transmitted_in(Round global_round, NodeId v) const {
    auto it = std::lower_bound(tx_rounds.begin(), tx_rounds.end(), global_round,
                               [](const auto& a, Round r) { return a.first < r; });
    if (it == tx_rounds.end() || it->first != global_round) return false;
    return std::binary_search(it->second.begin(), it->second.end(), v);
  }
};

// Per-node protocol behavior for engine-driven runs. Callbacks see only the
// node's id, the global round and received messages; positions stay inside
// the physical layer.
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual void on_wake(NodeId v, Round round, const Message* first_msg) = 0;
  virtual std::optional<Message> on_round_start(NodeId v, Round round) = 0;
  virtual void on_receive(NodeId v, Round round, NodeId sender, const Message& msg) = 0;
  virtual bool done() const { return false; }
};

struct ExecutionResult {
  std::vector<RoundTrace> traces;
  Round rounds_used = 0;
  bool timeout = false;
  std::map<NodeId, Round> wake_rounds;  // -1 for initially awake
};

// Round-synchronous simulator state: global clock, awake set, trace sink.
class Sim {
 public:
  explicit Sim(const Network& net)
      : net_(&net),
        awake_(net.size(), 0),
        wake_round_(net.size(), -2),
        wake_source_(net.size(), -1) {}

  const Network& net() const { return *net_; }
  Round now() const { return now_; }
  void set_sink(TraceSink* sink) { sink_ = sink; }

  void enable_pair_tracking() {
    track_pairs_ = true;
    heard_by_.assign(net_->size(), {});
  }
  bool pair_heard(NodeId sender, NodeId receiver) const {
    if (!track_pairs_) throw ContractError("Sim: pair tracking not enabled");
    return heard_by_[net_->index(sender)].count(net_->index(receiver)) != 0;
  }

  void wake_all() {
    std::fill(awake_.begin(), awake_.end(), 1);
    std::fill(wake_round_.begin(), wake_round_.end(), -1);
  }
  void wake(NodeId v, Round r, NodeId source = -1) {
    int i = net_->index(v);
    if (awake_[i]) return;
    awake_[i] = 1;
    wake_round_[i] = r;
    wake_source_[i] = source;
  }
  bool is_awake(NodeId v) const { return awake_[net_->index(v)]; }
  Round wake_round(NodeId v) const { return wake_round_[net_->index(v)]; }
  NodeId wake_source(NodeId v) const { return wake_source_[net_->index(v)]; }
  std::vector<NodeId> awake_ids() const {
    std::vector<NodeId> out;
    for (size_t i = 0; i < awake_.size(); ++i)
      if (awake_[i]) out.push_back(net_->id_at(static_cast<int>(i)));
    return out;
  }
  size_t awake_count() const {
    size_t c = 0;
    for (auto a : awake_) c += a;
    return c;
  }

  // Executes one round with the given transmissions; wakes receivers of
  // their first message. Transmitters must be awake before this round.
  std::vector<ReceptionEvent> step(const std::vector<std::pair<NodeId, const Message*>>& tx,
                                   std::vector<Delivery>* deliveries = nullptr) {
    std::vector<NodeId> ids;
    ids.reserve(tx.size());
    for (auto& [v, m] : tx) {
      int i = net_->index(v);
      if (!awake_[i] || wake_round_[i] >= now_)
        throw ContractError("Sim::step: node " + std::to_string(v) + " transmits before acting round");
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    auto events = resolve_round(ids, *net_);
    for (auto& e : events) {
      e.round = now_;
      int ri = net_->index(e.receiver);
      if (!awake_[ri]) {
        awake_[ri] = 1;
        wake_round_[ri] = now_;
        wake_source_[ri] = e.sender;
      }
      if (track_pairs_) heard_by_[net_->index(e.sender)].insert(ri);
    }
    if (deliveries) {
      for (const auto& e : events) {
        auto it = std::lower_bound(tx.begin(), tx.end(), e.sender,
                                   [](const auto& a, NodeId s) { return a.first < s; });
        deliveries->push_back(Delivery{now_, e.receiver, e.sender, *it->second});
      }
    }
    if (sink_ && !ids.empty()) {
      RoundTrace t;
      t.round = now_;
      t.transmitters = ids;
      t.receptions = events;
      sink_->on_round(t);
    }
    ++now_;
    return events;
  }

  void skip_rounds(Round n) { now_ += n; }

  // Executes a full schedule: participant v transmits msg(v) in round i iff
  // v (or (v, cluster(v)) for wcss) lies in the i-th set and gate(v, rep)
  // admits it. Silent rounds still advance the global clock.
  ExecLog run_schedule(const Schedule& s, const ParticipantSet& parts,
                       const std::map<NodeId, Message>& msgs,
                       const std::function<bool(NodeId)>& gate = nullptr) {
    ExecLog log;
    log.start_round = now_;
    log.length = static_cast<Round>(s.length());
    if (s.kind == ScheduleKind::Wcss) {
      for (const auto& p : parts)
        if (p.cluster < 0) throw ContractError("run_schedule: wcss requires cluster tags");
    }
    std::vector<int8_t> active(net_->params().id_bound + 1, 0);
    std::vector<ClusterId> pcluster(net_->params().id_bound + 1, -1);
    for (const auto& p : parts) {
      if (p.id < 1 || p.id > net_->params().id_bound || !net_->has(p.id))
        throw ContractError("run_schedule: participant outside network");
      if (gate && !gate(p.id)) continue;
      active[p.id] = 1;
      pcluster[p.id] = p.cluster;
    }
    const size_t len = s.length();
    std::vector<std::pair<NodeId, const Message*>> tx;
    for (size_t i = 0; i < len; ++i) {
      tx.clear();
      if (s.kind == ScheduleKind::Wcss) {
        for (auto [x, c] : s.pair_sets[i])
          if (x >= 1 && x <= net_->params().id_bound && active[x] && pcluster[x] == c) {
            auto it = msgs.find(x);
            tx.push_back({x, it == msgs.end() ? &empty_msg_ : &it->second});
          }
      } else {
        for (int x : s.sets[i])
          if (x >= 1 && x <= net_->params().id_bound && active[x]) {
            auto it = msgs.find(x);
            tx.push_back({x, it == msgs.end() ? &empty_msg_ : &it->second});
          }
      }
      if (tx.empty()) {
        ++now_;
        continue;
      }
      std::sort(tx.begin(), tx.end(), [](auto& a, auto& b) { return a.first < b.first; });
      tx.erase(std::unique(tx.begin(), tx.end(), [](auto& a, auto& b) { return a.first == b.first; }),
               tx.end());
      Round r = now_;
      step(tx, &log.deliveries);
      std::vector<NodeId> ids;
      ids.reserve(tx.size());
      for (auto& [v, m] : tx) ids.push_back(v);
      log.tx_rounds.push_back({r, std::move(ids)});
    }
    return log;
  }

 private:
  const Network* net_;
  Round now_ = 0;
  std::vector<uint8_t> awake_;
  std::vector<Round> wake_round_;
  std::vector<NodeId> wake_source_;
  TraceSink* sink_ = nullptr;
  Message empty_msg_;
  bool track_pairs_ = false;
  std::vector<std::set<int>> heard_by_;  // by sender index
};

// Protocol-driven execution: collects each acting node's transmit decision,
// resolves the round, delivers receptions (waking first-time receivers).
// A node woken in round r acts from round r+1 onward.
inline ExecutionResult run(const Network& net, Protocol& protocol,
                           const std::vector<NodeId>& initial_awake, Round max_rounds,
                           TraceSink* sink = nullptr, bool keep_traces = false) {
  if (initial_awake.empty()) throw ParameterError("run: initial_awake must be nonempty");
  if (max_rounds <= 0) throw ParameterError("run: max_rounds must be positive");
  ExecutionResult res;
  Sim sim(net);
  sim.set_sink(sink);
  for (NodeId v : initial_awake) {
    sim.wake(v, -1);
    res.wake_rounds[v] = -1;
  }
  for (NodeId v : initial_awake) protocol.on_wake(v, -1, nullptr);

  res.timeout = true;
  for (Round r = 0; r < max_rounds; ++r) {
    std::vector<std::pair<NodeId, Message>> decided;
    for (const auto& node : net.nodes()) {
      if (!sim.is_awake(node.id) || sim.wake_round(node.id) >= r) continue;
      auto m = protocol.on_round_start(node.id, r);
      if (m) decided.emplace_back(node.id, std::move(*m));
    }
    std::vector<std::pair<NodeId, const Message*>> tx;
    tx.reserve(decided.size());
    for (auto& [v, m] : decided) tx.push_back({v, &m});
    std::vector<Delivery> deliveries;
    auto events = sim.step(tx, &deliveries);
    if (keep_traces) {
      RoundTrace t;
      t.round = r;
      for (auto& [v, m] : decided) t.transmitters.push_back(v);
      t.receptions = events;
      res.traces.push_back(std::move(t));
    }
    for (const auto& d : deliveries) {
      if (sim.wake_round(d.receiver) == r && !res.wake_rounds.count(d.receiver)) {
        res.wake_rounds[d.receiver] = r;
        protocol.on_wake(d.receiver, r, &d.msg);
      } else {
        protocol.on_receive(d.receiver, r, d.sender, d.msg);
      }
    }
    res.rounds_used = r + 1;
    if (protocol.done()) {
      res.timeout = false;
      break;
    }
  }
  return res;
}

}  // namespace sinrnet
