#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "sinrnet/clustering.hpp"
#include "sinrnet/engine.hpp"

namespace sinrnet {

// Transmits the payload in rounds congruent to the own ID modulo N once it
// holds the payload. The classic deterministic retry pattern.
class RoundRobinProtocol : public Protocol {
 public:
  explicit RoundRobinProtocol(int N) : N_(N) {}
  void on_wake(NodeId v, Round, const Message* msg) override {
    if (!msg) has_[v] = true;  // the initially awake node is the source
    if (msg && msg->kind == MsgKind::Payload) has_[v] = true;
  }
  std::optional<Message> on_round_start(NodeId v, Round r) override {
    if (has_.count(v) && r % N_ == v % N_) return Message{MsgKind::Payload, v, 0, 0, {}};
    return std::nullopt;
  }
  void on_receive(NodeId v, Round, NodeId, const Message& msg) override {
    if (msg.kind == MsgKind::Payload) has_[v] = true;
  }

 private:
  int N_;
  std::map<NodeId, bool> has_;
};

// Transmits exactly once, id rounds after waking.
class SingleShotProtocol : public Protocol {
 public:
  void on_wake(NodeId v, Round r, const Message*) override { wake_[v] = r; }
  std::optional<Message> on_round_start(NodeId v, Round r) override {
    if (wake_.count(v) && r == wake_[v] + v) return Message{MsgKind::Payload, v, 0, 0, {}};
    return std::nullopt;
  }
  void on_receive(NodeId, Round, NodeId, const Message&) override {}

 private:
  std::map<NodeId, Round> wake_;
};

// Per-node, fixed-budget realization of the single-source broadcast wave:
// phase 1 is a sparse-network pass by the source; phase p >= 2 labels the
// wave that joined in phase p-1 (proximity graphs -> local minima ->
// parent trees -> subtree sizes -> label ranges) and then runs one
// label-gated sparse-network pass per label value. Wave membership and
// cluster inheritance come from the first received payload message. This
// variant keeps the inherited clustering (no radius-reduction stage), which
// is sufficient on the chain-like topologies it is exercised on.
//
// All timing is global-round arithmetic from shared constants, so the
// behavior of a node is a pure function of its id, the round number and its
// received messages.
class GlobalBroadcastProtocol : public Protocol {
 public:
  GlobalBroadcastProtocol(int N, int64_t gamma, RunConfig cfg)
      : N_(N), gamma_(std::max<int64_t>(2, gamma)), cfg_(cfg) {
    sns_ = build_ssf(N_, cfg_.sns_k, cfg_.seed + 2, cfg_.sns_len(N_));
    wcss_ = build_wcss(N_, cfg_.kappa, cfg_.rho, cfg_.seed + 1, cfg_.wcss_len(N_));
    t_sns_ = static_cast<Round>(sns_.sets.size());
    t_w_ = static_cast<Round>(wcss_.pair_sets.size());
    int64_t lam = gamma_;
    int k = static_cast<int>(std::ceil(std::log(static_cast<double>(gamma_)) / std::log(4.0 / 3.0)));
    for (int s = 0; s < k; ++s) {
      iters_ += lam;
      lam = (3 * lam + 3) / 4;
    }
    t_iter_ = static_cast<Round>(cfg_.kappa + 3) * t_w_;
    t_stage1_ = iters_ * t_iter_;
    t_label_ = t_stage1_ + 2 * iters_ * t_w_;
    t_phase_ = t_label_ + gamma_ * t_sns_;
  }

  Round phase_start(int64_t p) const { return p <= 1 ? 0 : t_sns_ + (p - 2) * t_phase_; }
  Round sns_length() const { return t_sns_; }

  struct Slot {
    enum class Part { SourcePass, Exchange, Confirm, Announce, Claim, BottomUp, TopDown, LabelPass };
    Part part = Part::SourcePass;
    int64_t phase = 1;
    int64_t iter = 0;    // flat iteration index inside stage 1
    int64_t rep = 0;     // confirmation repetition
    int64_t label = 1;   // label block inside stage 2
    int64_t sched = 0;   // round index inside the schedule
  };

  Slot classify(Round r) const {
    Slot s;
    if (r < t_sns_) {
      s.part = Slot::Part::SourcePass;
      s.phase = 1;
      s.sched = r;
      return s;
    }
    Round q = r - t_sns_;
    s.phase = 2 + q / t_phase_;
    Round off = q % t_phase_;
    if (off < t_stage1_) {
      s.iter = off / t_iter_;
      Round sub = off % t_iter_;
      Round block = sub / t_w_;
      s.sched = sub % t_w_;
      if (block == 0)
        s.part = Slot::Part::Exchange;
      else if (block <= cfg_.kappa) {
        s.part = Slot::Part::Confirm;
        s.rep = block - 1;
      } else if (block == cfg_.kappa + 1)
        s.part = Slot::Part::Announce;
      else
        s.part = Slot::Part::Claim;
      return s;
    }
    off -= t_stage1_;
    if (off < iters_ * t_w_) {
      s.part = Slot::Part::BottomUp;
      s.iter = off / t_w_;
      s.sched = off % t_w_;
      return s;
    }
    off -= iters_ * t_w_;
    if (off < iters_ * t_w_) {
      s.part = Slot::Part::TopDown;
      s.iter = iters_ - 1 - off / t_w_;
      s.sched = off % t_w_;
      return s;
    }
    off -= iters_ * t_w_;
    s.part = Slot::Part::LabelPass;
    s.label = 1 + off / t_sns_;
    s.sched = off % t_sns_;
    return s;
  }

  void on_wake(NodeId v, Round r, const Message* msg) override {
    St& st = st_[v];
    if (!msg) {
      st.source = true;
      st.joined = true;
      st.wave = 0;
      st.cluster = v;
      return;
    }
    take(v, r, msg->a >= 0 ? msg->a : -1, *msg);
  }

  void on_receive(NodeId v, Round r, NodeId sender, const Message& msg) override {
    take(v, r, sender, msg);
  }

  std::optional<Message> on_round_start(NodeId v, Round r) override {
    St& st = st_[v];
    Slot sl = classify(r);
    if (sl.part == Slot::Part::SourcePass) {
      if (st.source && in_sns(v, sl.sched)) return Message{MsgKind::Payload, v, st.cluster, 0, {}};
      return std::nullopt;
    }
    if (!st.joined || st.wave + 1 != sl.phase) return std::nullopt;  // not my acting phase

    switch (sl.part) {
      case Slot::Part::Exchange: {
        sync_iteration(st, sl.phase, sl.iter);
        if (st.active && in_wcss(v, st.cluster, sl.sched))
          return Message{MsgKind::Announce, v, st.cluster, 0, {}};
        return std::nullopt;
      }
      case Slot::Part::Confirm: {
        finish_exchange(v, st, sl.iter);
        if (st.active && sl.rep < static_cast<int64_t>(st.cand.size()) && in_wcss(v, st.cluster, sl.sched))
          return Message{MsgKind::Confirm, v, st.cand[sl.rep], 0, {}};
        return std::nullopt;
      }
      case Slot::Part::Announce: {
        finish_confirm(v, st, sl.iter);
        if (st.active && st.in_y && in_wcss(v, st.cluster, sl.sched))
          return Message{MsgKind::MisJoin, v, 0, 0, {}};
        return std::nullopt;
      }
      case Slot::Part::Claim: {
        decide_parent(v, st, sl.iter);
        if (st.active && !st.in_y && st.attach_iter == sl.iter && in_wcss(v, st.cluster, sl.sched))
          return Message{MsgKind::ParentClaim, v, st.parent, 0, {}};
        return std::nullopt;
      }
      case Slot::Part::BottomUp: {
        if (st.attach_iter == sl.iter && in_wcss(v, st.cluster, sl.sched))
          return Message{MsgKind::SubtreeSize, v, st.subtree, 0, {}};
        return std::nullopt;
      }
      case Slot::Part::TopDown: {
        if (st.attach_iter < 0 && st.lo < 0) st.lo = 1;  // roots open their range
        auto cit = st.children_by_iter.find(sl.iter);
        if (cit == st.children_by_iter.end() || st.lo < 0) return std::nullopt;
        if (!in_wcss(v, st.cluster, sl.sched)) return std::nullopt;
        Message m{MsgKind::RangeAssign, v, 0, 0, {}};
        auto offsets = child_offsets(st);
        for (NodeId c : cit->second) m.ranges.push_back({c, offsets.at(c)});
        return m;
      }
      case Slot::Part::LabelPass: {
        int64_t label = st.lo >= 1 ? st.lo : 1;
        if (label == sl.label && in_sns(v, sl.sched))
          return Message{MsgKind::Payload, v, st.cluster, 0, {}};
        return std::nullopt;
      }
      default:
        return std::nullopt;
    }
  }

 private:
  struct St {
    bool source = false;
    bool joined = false;
    int64_t wave = -1;  // acts in phase wave+1
    ClusterId cluster = -1;

    // stage-1 scratch, keyed by acting-phase iterations
    bool active = true;
    bool attached = false;
    int64_t attach_iter = -1;
    NodeId parent = -1;
    bool in_y = false;
    bool parented_this_iter = false;
    int64_t cur_iter = -1;
    int64_t exchange_done_iter = -1;
    int64_t confirm_done_iter = -1;
    int64_t parent_done_iter = -1;
    std::map<NodeId, ClusterId> heard_cluster;
    std::vector<std::tuple<int64_t, NodeId>> heard_log;  // (sched round, sender)
    std::set<NodeId> heard_set;
    std::vector<NodeId> cand;
    std::set<NodeId> confirmed;  // E_v
    std::set<NodeId> y_announcers;
    std::map<int64_t, std::vector<NodeId>> children_by_iter;
    std::map<NodeId, int> child_size;
    int subtree = 1;
    int lo = -1;
  };

  bool in_sns(NodeId v, int64_t round) const {
    const auto& s = sns_.sets[static_cast<size_t>(round)];
    return std::binary_search(s.begin(), s.end(), v);
  }
  bool in_wcss(NodeId v, ClusterId c, int64_t round) const {
    const auto& s = wcss_.pair_sets[static_cast<size_t>(round)];
    return std::binary_search(s.begin(), s.end(), std::make_pair<int, int>(v, c));
  }

  void sync_iteration(St& st, int64_t, int64_t iter) {
    if (st.cur_iter == iter) return;
    // iteration boundary: parents retire from the active set for the rest
    // of the stage sequence; stage boundaries are implicit (active resets
    // only through attachment, matching the retained-set semantics)
    if (st.parented_this_iter) st.active = false;
    if (st.attached) st.active = false;
    st.parented_this_iter = false;
    st.cur_iter = iter;
    st.heard_cluster.clear();
    st.heard_log.clear();
    st.heard_set.clear();
    st.cand.clear();
    st.confirmed.clear();
    st.y_announcers.clear();
    st.in_y = false;
  }

  void finish_exchange(NodeId v, St& st, int64_t iter) {
    sync_iteration(st, 0, iter);
    if (st.exchange_done_iter == iter || !st.active) return;
    st.exchange_done_iter = iter;
    std::set<NodeId> cand = st.heard_set;
    for (auto& [rnd, u] : st.heard_log) {
      const auto& set = wcss_.pair_sets[static_cast<size_t>(rnd)];
      for (NodeId w : st.heard_set) {
        if (w == u) continue;
        auto cit = st.heard_cluster.find(w);
        if (cit != st.heard_cluster.end() &&
            std::binary_search(set.begin(), set.end(), std::make_pair<int, int>(w, cit->second)))
          cand.erase(w);
      }
    }
    if (static_cast<int>(cand.size()) > cfg_.kappa) cand.clear();
    st.cand.assign(cand.begin(), cand.end());
    (void)v;
  }

  void finish_confirm(NodeId v, St& st, int64_t iter) {
    finish_exchange(v, st, iter);
    if (st.confirm_done_iter == iter || !st.active) return;
    st.confirm_done_iter = iter;
    NodeId mn = v;
    for (NodeId u : st.confirmed) mn = std::min(mn, u);
    st.in_y = (mn == v);  // local minimum over the confirmed neighborhood
  }

  void decide_parent(NodeId v, St& st, int64_t iter) {
    finish_confirm(v, st, iter);
    if (st.parent_done_iter == iter || !st.active || st.in_y || st.attached) return;
    st.parent_done_iter = iter;
    NodeId best = -1;
    for (NodeId u : st.confirmed)
      if (st.y_announcers.count(u) && (best < 0 || u < best)) best = u;
    if (best >= 0) {
      st.parent = best;
      st.attached = true;
      st.attach_iter = iter;
    }
  }

  std::map<NodeId, int> child_offsets(const St& st) const {
    std::vector<NodeId> kids;
    for (auto& [it, ch] : st.children_by_iter) kids.insert(kids.end(), ch.begin(), ch.end());
    std::sort(kids.begin(), kids.end());
    std::map<NodeId, int> ofs;
    int cursor = st.lo + 1;
    for (NodeId c : kids) {
      auto sit = st.child_size.find(c);
      int sz = sit == st.child_size.end() ? 1 : sit->second;
      ofs[c] = cursor;
      cursor += sz;
    }
    return ofs;
  }

  void take(NodeId v, Round r, NodeId sender, const Message& msg) {
    St& st = st_[v];
    if (msg.kind == MsgKind::Payload && !st.joined) {
      st.joined = true;
      Slot sl = classify(r);
      st.wave = sl.part == Slot::Part::SourcePass ? 1 : sl.phase;
      st.cluster = msg.b >= 0 ? msg.b : sender;
      return;
    }
    if (!st.joined) return;
    Slot sl = classify(r);
    if (st.wave + 1 != sl.phase) return;
    switch (sl.part) {
      case Slot::Part::Exchange: {
        sync_iteration(st, sl.phase, sl.iter);
        if (!st.active || msg.kind != MsgKind::Announce) break;
        if (msg.b != st.cluster) break;  // other clusters are ignored here
        st.heard_cluster[sender] = msg.b;
        st.heard_log.push_back({sl.sched, sender});
        st.heard_set.insert(sender);
        break;
      }
      case Slot::Part::Confirm: {
        if (msg.kind == MsgKind::Confirm && msg.b == v) {
          finish_exchange(v, st, sl.iter);
          if (std::binary_search(st.cand.begin(), st.cand.end(), msg.a)) st.confirmed.insert(msg.a);
        }
        break;
      }
      case Slot::Part::Announce: {
        if (msg.kind == MsgKind::MisJoin) st.y_announcers.insert(msg.a);
        break;
      }
      case Slot::Part::Claim: {
        if (msg.kind == MsgKind::ParentClaim && msg.b == v) {
          st.children_by_iter[sl.iter].push_back(msg.a);
          st.parented_this_iter = true;
        }
        break;
      }
      case Slot::Part::BottomUp: {
        if (msg.kind == MsgKind::SubtreeSize && st.children_by_iter.count(sl.iter)) {
          const auto& ch = st.children_by_iter.at(sl.iter);
          if (std::find(ch.begin(), ch.end(), msg.a) != ch.end()) {
            st.subtree += msg.b;
            st.child_size[msg.a] = msg.b;
          }
        }
        break;
      }
      case Slot::Part::TopDown: {
        if (msg.kind == MsgKind::RangeAssign)
          for (const auto& e : msg.ranges)
            if (e.child == v) st.lo = e.lo;
        break;
      }
      default:
        break;
    }
  }

  int N_;
  int64_t gamma_;
  RunConfig cfg_;
  Schedule sns_, wcss_;
  Round t_sns_ = 0, t_w_ = 0, t_iter_ = 0, t_stage1_ = 0, t_label_ = 0, t_phase_ = 0;
  int64_t iters_ = 0;
  std::map<NodeId, St> st_;
};

}  // namespace sinrnet
