#include <catch2/catch_amalgamated.hpp>

#include "sinrnet/geometry.hpp"

using namespace sinrnet;

TEST_CASE("packing_bound matches the area formula") {
  // a single point always fits; the bound is allowed to overshoot
  CHECK(packing_bound(1.0, 2.0) == 4);
  CHECK(packing_bound(1.0, 1.0) == 9);
  // direct formula evaluation: (2*5/0.9 + 1)^2 = (109/9)^2 = 146.68..
  CHECK(packing_bound(5.0, 0.9) == 146);
  CHECK_THROWS_AS(packing_bound(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(packing_bound(1.0, -1.0), ParameterError);
}

TEST_CASE("packing_bound monotonicity") {
  for (double r1 : {0.5, 1.0, 2.0, 5.0}) {
    int64_t prev = packing_bound(r1, 0.1);
    for (double r2 : {0.2, 0.5, 1.0, 2.0, 4.0}) {
      int64_t cur = packing_bound(r1, r2);
      CHECK(cur <= prev);  // nonincreasing in r2
      prev = cur;
    }
  }
  for (double r2 : {0.3, 1.0}) {
    int64_t prev = 0;
    for (double r1 : {0.5, 1.0, 2.0, 4.0}) {
      int64_t cur = packing_bound(r1, r2);
      CHECK(cur >= prev);  // nondecreasing in r1
      prev = cur;
    }
  }
}

TEST_CASE("dense_pair_spacing degenerate and algebraic cases") {
  // gamma/2 = 1 is satisfied by a single point: capped at the ball diameter
  CHECK(dense_pair_spacing(2, 1.0) == 2.0);
  // (2/d+1)^2 = 9 at d = 1
  CHECK(dense_pair_spacing(18, 1.0) == Catch::Approx(1.0).margin(1e-8));
  CHECK(dense_pair_spacing(200, 1.0) < dense_pair_spacing(100, 1.0));
  CHECK_THROWS_AS(dense_pair_spacing(1, 1.0), ParameterError);
}

TEST_CASE("dense_pair_spacing is the threshold of the packing bound") {
  for (int64_t gamma : {6, 18, 40, 120}) {
    for (double r : {1.0, 2.0}) {
      double d = dense_pair_spacing(gamma, r);
      CHECK(packing_bound(r, d) * 2 >= gamma);
      if (d < 2.0 * r) CHECK(packing_bound(r, d + 1e-6) * 2 < gamma);
    }
  }
}

TEST_CASE("close pairs: two isolated nodes") {
  // gamma as large as the pair distance allows: d_cap(300) ~ 0.178 > 0.1
  std::vector<PlacedNode> nodes{{1, {0.0, 0.0}}, {2, {0.1, 0.0}}};
  auto pairs = find_close_pairs(nodes, nullptr, 300, 1.0, 0.1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].u == 1);
  CHECK(pairs[0].w == 2);
  CHECK(pairs[0].distance == Catch::Approx(0.1));
  CHECK(pairs[0].zeta > 0.0);
  CHECK(pairs[0].zeta <= 1.0);
}

TEST_CASE("close pairs: three collinear nodes, condition-by-condition") {
  // nodes at 0, 0.1, 0.15 in one cluster: only the mutually-nearest pair
  // (0.1, 0.15) survives; (0, 0.1) fails mutual nearness.
  std::vector<PlacedNode> nodes{{1, {0.0, 0.0}}, {2, {0.1, 0.0}}, {3, {0.15, 0.0}}};
  ClusterAssignment ca;
  for (NodeId v : {1, 2, 3}) ca.cluster_of[v] = 7;
  ca.center_of[7] = 1;
  auto pairs = find_close_pairs(nodes, &ca, 6, 1.0, 0.1);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].u == 2);
  CHECK(pairs[0].w == 3);
}

TEST_CASE("close pairs: condition (d) rejects a crowded neighborhood") {
  // gamma = 40 gives d_cap ~ 0.578; the pair (1,2) at distance 0.3 has
  // zeta ~ 0.519, so nodes at 0.45 from node 1 lie inside its zeta-ball
  // while still satisfying mutual nearness (c).
  ClusterAssignment ca;
  for (NodeId v : {1, 2, 3, 4}) ca.cluster_of[v] = 1;
  ca.center_of[1] = 1;
  const double d_cap = dense_pair_spacing(40, 1.0);
  REQUIRE(d_cap == Catch::Approx(0.576).margin(2e-3));

  std::vector<PlacedNode> crowded{
      {1, {0.0, 0.0}}, {2, {0.3, 0.0}}, {3, {0.0, 0.45}}, {4, {0.1, 0.45}}};
  auto pairs = find_close_pairs(crowded, &ca, 40, 1.0, 0.1);
  std::vector<std::pair<NodeId, NodeId>> got;
  for (auto& p : pairs) got.push_back({p.u, p.w});
  // (3,4) at distance 0.1 < 0.3/2 inside B(1, zeta): (1,2) fails (d)
  CHECK(std::find(got.begin(), got.end(), std::make_pair<NodeId, NodeId>(1, 2)) == got.end());
  // (3,4) itself qualifies
  CHECK(std::find(got.begin(), got.end(), std::make_pair<NodeId, NodeId>(3, 4)) != got.end());

  // moving the crowded pair outside the zeta-balls restores (1,2)
  std::vector<PlacedNode> spread{
      {1, {0.0, 0.0}}, {2, {0.3, 0.0}}, {3, {0.0, 0.56}}, {4, {0.1, 0.56}}};
  auto pairs2 = find_close_pairs(spread, &ca, 40, 1.0, 0.1);
  got.clear();
  for (auto& p : pairs2) got.push_back({p.u, p.w});
  CHECK(std::find(got.begin(), got.end(), std::make_pair<NodeId, NodeId>(1, 2)) != got.end());
}

TEST_CASE("dense cluster always contains a close pair") {
  // gamma above the 2*packing_bound(r, 1-eps) threshold so the spacing
  // bound is below 1-eps
  const double eps = 0.2;
  const int64_t gamma = 26;
  REQUIRE(dense_pair_spacing(gamma, 1.0) <= 1.0 - eps);
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    ClusterAssignment ca;
    std::vector<PlacedNode> nodes;
    int m = 13 + static_cast<int>(rng.below(10));  // >= gamma/2 members
    for (int i = 0; i < m; ++i) {
      double ang = rng.unit() * 6.283185307179586;
      double rad = std::sqrt(rng.unit()) * 1.0;
      nodes.push_back({i + 1, {rad * std::cos(ang), rad * std::sin(ang)}});
      ca.cluster_of[i + 1] = 1;
    }
    ca.center_of[1] = 1;
    auto pairs = find_close_pairs(nodes, &ca, gamma, 1.0, eps);
    CHECK(!pairs.empty());
  }
}

TEST_CASE("dense unit ball yields a close pair within radius 5") {
  const double eps = 0.2;
  const int64_t gamma = 26;
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<PlacedNode> nodes;
    int id = 1;
    // dense ball at the origin
    for (int i = 0; i < 14; ++i) {
      double ang = rng.unit() * 6.283185307179586;
      double rad = std::sqrt(rng.unit());
      nodes.push_back({id++, {rad * std::cos(ang), rad * std::sin(ang)}});
    }
    // scattered far nodes
    for (int i = 0; i < 10; ++i)
      nodes.push_back({id++, {8.0 + 2.0 * rng.unit(), 8.0 + 2.0 * rng.unit()}});
    auto pairs = find_close_pairs(nodes, nullptr, gamma, 1.0, eps);
    bool found_near = false;
    for (auto& p : pairs) {
      Point pu, pw;
      for (auto& n : nodes) {
        if (n.id == p.u) pu = n.pos;
        if (n.id == p.w) pw = n.pos;
      }
      if (dist(pu, {0, 0}) <= 5.0 && dist(pw, {0, 0}) <= 5.0) found_near = true;
      CHECK(p.distance <= 1.0 - eps);  // condition (b) on every reported pair
    }
    CHECK(found_near);
  }
}

TEST_CASE("density: empty, unit ball, clustered max") {
  std::vector<PlacedNode> none;
  CHECK(density(none, nullptr) == 0);

  std::vector<PlacedNode> ball;
  for (int i = 0; i < 7; ++i) ball.push_back({i + 1, {0.1 * i, 0.0}});
  CHECK(density(ball, nullptr) == 7);  // all within radius 0.6 of each other

  ClusterAssignment ca;
  int id = 1;
  std::vector<PlacedNode> nodes;
  for (int c = 0; c < 3; ++c) {
    int sz = c == 1 ? 7 : (c == 0 ? 3 : 5);
    for (int i = 0; i < sz; ++i) {
      nodes.push_back({id, {static_cast<double>(c * 10), static_cast<double>(i)}});
      ca.cluster_of[id] = c + 1;
      ++id;
    }
    ca.center_of[c + 1] = id - 1;
  }
  CHECK(density(nodes, &ca) == 7);
}

TEST_CASE("validate_r_clustering reports the violating ids") {
  std::vector<PlacedNode> nodes{{1, {0, 0}}, {2, {0.5, 0}}, {3, {5, 0}}, {4, {5.2, 0}}};
  ClusterAssignment ok;
  ok.cluster_of = {{1, 1}, {2, 1}, {3, 3}, {4, 3}};
  ok.center_of = {{1, 1}, {3, 3}};
  CHECK(validate_r_clustering(nodes, ok, 1.0, 0.1).valid());

  // singleton clusters with pairwise distance >= 1 - eps are valid for any r
  ClusterAssignment singletons;
  for (NodeId v : {1, 3}) {
    singletons.cluster_of[v] = v;
    singletons.center_of[v] = v;
  }
  std::vector<PlacedNode> spread{{1, {0, 0}}, {3, {5, 0}}};
  CHECK(validate_r_clustering(spread, singletons, 0.0, 0.1).valid());

  // two centers at distance 0.5 with eps = 0.1: centers too close
  ClusterAssignment close;
  std::vector<PlacedNode> cn{{1, {0, 0}}, {2, {0.5, 0}}};
  close.cluster_of = {{1, 1}, {2, 2}};
  close.center_of = {{1, 1}, {2, 2}};
  auto rep = validate_r_clustering(cn, close, 1.0, 0.1);
  REQUIRE(rep.violations.size() == 1);
  CHECK(rep.violations[0].kind == ClusteringViolation::Kind::CentersTooClose);

  // member outside the radius
  ClusterAssignment far;
  far.cluster_of = {{1, 1}, {3, 1}};
  far.center_of = {{1, 1}};
  auto rep2 = validate_r_clustering(spread, far, 1.0, 0.1);
  REQUIRE(rep2.violations.size() == 1);
  CHECK(rep2.violations[0].kind == ClusteringViolation::Kind::MemberOutsideRadius);
  CHECK(rep2.violations[0].a == 3);

  // missing center declaration
  ClusterAssignment nocenter;
  nocenter.cluster_of = {{1, 1}};
  auto rep3 = validate_r_clustering(spread, nocenter, 1.0, 0.1);
  REQUIRE(rep3.violations.size() == 1);
  CHECK(rep3.violations[0].kind == ClusteringViolation::Kind::MissingCenter);
}
