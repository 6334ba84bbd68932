#include <catch2/catch_amalgamated.hpp>

#include "sinrnet/engine.hpp"

using namespace sinrnet;

namespace {

Network small_net(double eps = 0.2) {
  // node 1 at the origin; 2 and 3 within range; 4 beyond
  auto p = SinrParams::make(3.0, 2.0, 1.0, eps, 16);
  return Network::make(p, {{1, {0, 0}}, {2, {0.5, 0}}, {3, {0, 0.9}}, {4, {3, 0}}});
}

struct SourceOnce : Protocol {
  NodeId source;
  explicit SourceOnce(NodeId s) : source(s) {}
  void on_wake(NodeId, Round, const Message*) override {}
  std::optional<Message> on_round_start(NodeId v, Round r) override {
    if (v == source && r == 0) return Message{MsgKind::Payload, v, 0, 0, {}};
    return std::nullopt;
  }
  void on_receive(NodeId, Round, NodeId, const Message&) override {}
};

// every awake node transmits its id every round
struct Chatter : Protocol {
  std::map<NodeId, Round> first_tx;
  void on_wake(NodeId, Round, const Message*) override {}
  std::optional<Message> on_round_start(NodeId v, Round r) override {
    if (!first_tx.count(v)) first_tx[v] = r;
    return Message{MsgKind::Announce, v, 0, 0, {}};
  }
  void on_receive(NodeId, Round, NodeId, const Message&) override {}
};

}  // namespace

TEST_CASE("source transmits once: in-range nodes wake in round 0") {
  auto net = small_net();
  SourceOnce proto(1);
  auto res = run(net, proto, {1}, 3, nullptr, true);
  REQUIRE(res.wake_rounds.count(2));
  REQUIRE(res.wake_rounds.count(3));
  CHECK(res.wake_rounds.at(2) == 0);
  CHECK(res.wake_rounds.at(3) == 0);
  CHECK_FALSE(res.wake_rounds.count(4));
  CHECK(res.wake_rounds.at(1) == -1);
}

TEST_CASE("empty initial awake set is rejected") {
  auto net = small_net();
  SourceOnce proto(1);
  CHECK_THROWS_AS(run(net, proto, {}, 5), ParameterError);
  CHECK_THROWS_AS(run(net, proto, {1}, 0), ParameterError);
}

TEST_CASE("a node woken in round r transmits from round r+1") {
  auto net = small_net();
  Chatter proto;
  auto res = run(net, proto, {1}, 4, nullptr, true);
  // nodes 2,3 wake in round 0 (node 1 transmits alone), first transmit in 1
  CHECK(proto.first_tx.at(1) == 0);
  CHECK(proto.first_tx.at(2) == 1);
  CHECK(proto.first_tx.at(3) == 1);
  // wake set is nondecreasing and recorded once
  CHECK(res.wake_rounds.at(2) == 0);
}

TEST_CASE("run_schedule: singleton participant heard within range") {
  auto net = small_net();
  Sim sim(net);
  sim.wake_all();
  Schedule s;
  s.kind = ScheduleKind::Explicit;
  s.N = 16;
  s.sets = {{1}, {}, {1}};
  std::map<NodeId, Message> msgs{{1, Message{MsgKind::Payload, 1, 7, 0, {}}}};
  auto log = sim.run_schedule(s, to_participants({1}), msgs);
  CHECK(sim.now() == 3);
  // two transmitting rounds, receivers 2 and 3 each time
  int to2 = 0, to3 = 0, to4 = 0;
  for (auto& d : log.deliveries) {
    if (d.receiver == 2) ++to2;
    if (d.receiver == 3) ++to3;
    if (d.receiver == 4) ++to4;
    CHECK(d.msg.b == 7);
  }
  CHECK(to2 == 2);
  CHECK(to3 == 2);
  CHECK(to4 == 0);
  CHECK(log.transmitted_in(0, 1));
  CHECK_FALSE(log.transmitted_in(1, 1));
}

TEST_CASE("run_schedule: empty participant set is silent") {
  auto net = small_net();
  Sim sim(net);
  sim.wake_all();
  Schedule s;
  s.kind = ScheduleKind::Explicit;
  s.N = 16;
  s.sets = {{1, 2}, {3}};
  auto log = sim.run_schedule(s, {}, {});
  CHECK(log.deliveries.empty());
  CHECK(sim.now() == 2);
}

TEST_CASE("wcss participants must carry cluster tags") {
  auto net = small_net();
  Sim sim(net);
  sim.wake_all();
  Schedule s;
  s.kind = ScheduleKind::Wcss;
  s.N = 16;
  s.pair_sets = {{{1, 1}}};
  ParticipantSet untagged{{1, -1}};
  CHECK_THROWS_AS(sim.run_schedule(s, untagged, {}), ContractError);
  ParticipantSet tagged{{1, 1}};
  auto log = sim.run_schedule(s, tagged, {});
  CHECK(log.tx_rounds.size() == 1);
}

TEST_CASE("asleep nodes never transmit; waking is reception-driven") {
  auto net = small_net();
  Sim sim(net);
  sim.wake(1, -1);
  Schedule s;
  s.kind = ScheduleKind::Explicit;
  s.N = 16;
  s.sets = {{1, 2}};  // 2 is scheduled but asleep
  CHECK_THROWS_AS(sim.run_schedule(s, to_participants({1, 2}), {}), ContractError);
}

TEST_CASE("trace replay reproduces every reception") {
  auto net = small_net();
  CollectSink sink;
  Chatter proto;
  auto res = run(net, proto, {1}, 6, &sink, true);
  REQUIRE(!sink.traces.empty());
  for (const auto& t : sink.traces) {
    auto redo = resolve_round(t.transmitters, net);
    REQUIRE(redo.size() == t.receptions.size());
    for (size_t i = 0; i < redo.size(); ++i) {
      CHECK(redo[i].receiver == t.receptions[i].receiver);
      CHECK(redo[i].sender == t.receptions[i].sender);
      CHECK(redo[i].sinr_value == Catch::Approx(t.receptions[i].sinr_value));
    }
  }
}

TEST_CASE("determinism: identical runs give identical traces") {
  auto net = small_net();
  Chatter a, b;
  auto ra = run(net, a, {1}, 8, nullptr, true);
  auto rb = run(net, b, {1}, 8, nullptr, true);
  REQUIRE(ra.traces.size() == rb.traces.size());
  for (size_t i = 0; i < ra.traces.size(); ++i) {
    CHECK(ra.traces[i].transmitters == rb.traces[i].transmitters);
    REQUIRE(ra.traces[i].receptions.size() == rb.traces[i].receptions.size());
  }
}

TEST_CASE("position blindness: isometric transforms leave decisions unchanged") {
  auto p = SinrParams::make(3.0, 2.0, 1.0, 0.2, 16);
  std::vector<NetNode> base{{1, {0, 0}}, {2, {0.5, 0.2}}, {3, {1.1, 0.4}}, {4, {1.6, 0.1}}};
  auto net = Network::make(p, base);
  // rotate by 2.1 rad and translate by (12, -7)
  const double c = std::cos(2.1), s = std::sin(2.1);
  std::vector<NetNode> moved;
  for (auto& n : base)
    moved.push_back({n.id, {c * n.pos.x - s * n.pos.y + 12.0, s * n.pos.x + c * n.pos.y - 7.0}});
  auto net2 = Network::make(p, moved);
  Chatter a, b;
  auto ra = run(net, a, {1}, 10, nullptr, true);
  auto rb = run(net2, b, {1}, 10, nullptr, true);
  REQUIRE(ra.traces.size() == rb.traces.size());
  for (size_t i = 0; i < ra.traces.size(); ++i)
    CHECK(ra.traces[i].transmitters == rb.traces[i].transmitters);
}

TEST_CASE("timeout flag when the budget runs out") {
  auto net = small_net();
  Chatter proto;
  auto res = run(net, proto, {1}, 3);
  CHECK(res.timeout);
  CHECK(res.rounds_used == 3);
}
