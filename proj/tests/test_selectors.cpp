#include <catch2/catch_amalgamated.hpp>

#include "sinrnet/selectors.hpp"

using namespace sinrnet;

TEST_CASE("singleton family is a certified (N,1)-ssf") {
  auto s = build_ssf(4, 1, 1);
  REQUIRE(s.sets.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(s.sets[i] == std::vector<int>{i + 1});
  CHECK(s.certified);
  CHECK(verify_selector(s, ScheduleKind::Ssf, 4, 1).verified());
}

TEST_CASE("certified ssf at small sizes") {
  for (auto [N, k] : std::vector<std::pair<int, int>>{{8, 2}, {12, 3}, {16, 2}}) {
    auto s = build_ssf(N, k, 7);
    CHECK(s.certified);
    auto cert = verify_selector(s, ScheduleKind::Ssf, N, k);
    CHECK(cert.verified());
    CHECK(cert.pairs_checked > 0);
  }
}

TEST_CASE("parameter errors") {
  CHECK_THROWS_AS(build_ssf(4, 5, 1), ParameterError);
  CHECK_THROWS_AS(build_wss(4, 0, 1), ParameterError);
  CHECK_THROWS_AS(build_wcss(4, 2, 5, 1), ParameterError);
}

TEST_CASE("empty family fails verification with a counterexample") {
  Schedule empty;
  empty.kind = ScheduleKind::Ssf;
  empty.N = 4;
  empty.k = 2;
  auto cert = verify_selector(empty, ScheduleKind::Ssf, 4, 2);
  CHECK_FALSE(cert.verified());
  REQUIRE(cert.counterexample.has_value());
}

TEST_CASE("the powerset is certified for every k") {
  const int N = 5;
  Schedule s;
  s.kind = ScheduleKind::Explicit;
  s.N = N;
  for (int mask = 0; mask < (1 << N); ++mask) {
    std::vector<int> set;
    for (int v = 0; v < N; ++v)
      if (mask & (1 << v)) set.push_back(v + 1);
    s.sets.push_back(set);
  }
  for (int k = 1; k <= N; ++k) {
    CHECK(verify_selector(s, ScheduleKind::Ssf, N, k).verified());
    if (k < N) CHECK(verify_selector(s, ScheduleKind::Wss, N, k).verified());
  }
}

TEST_CASE("wss at k=1 needs witnesses: all 2-element subsets suffice") {
  const int N = 3;
  Schedule s;
  s.kind = ScheduleKind::Wss;
  s.N = N;
  s.k = 1;
  s.sets = {{1, 2}, {1, 3}, {2, 3}};
  CHECK(verify_selector(s, ScheduleKind::Wss, N, 1).verified());
  // singletons do not: no witness can see the selection
  Schedule singles;
  singles.kind = ScheduleKind::Wss;
  singles.N = N;
  singles.k = 1;
  singles.sets = {{1}, {2}, {3}};
  CHECK_FALSE(verify_selector(singles, ScheduleKind::Wss, N, 1).verified());
}

TEST_CASE("certified wss at small sizes") {
  for (auto [N, k] : std::vector<std::pair<int, int>>{{6, 2}, {8, 2}, {12, 3}}) {
    auto s = build_wss(N, k, 3);
    CHECK(s.certified);
    CHECK(verify_selector(s, ScheduleKind::Wss, N, k).verified());
  }
}

TEST_CASE("certified wss is also a certified ssf") {
  auto s = build_wss(8, 2, 5);
  REQUIRE(s.certified);
  CHECK(verify_selector(s, ScheduleKind::Ssf, 8, 2).verified());
}

TEST_CASE("certified wcss, incl. the degenerate single-conflict variant") {
  for (auto [N, k, l] : std::vector<std::tuple<int, int, int>>{{6, 2, 1}, {6, 2, 2}, {8, 2, 2}}) {
    auto s = build_wcss(N, k, l, 11);
    CHECK(s.certified);
    CHECK(verify_selector(s, ScheduleKind::Wcss, N, k, l).verified());
  }
}

TEST_CASE("wcss sets with an excluded cluster contribute no pairs for it") {
  auto s = build_wcss(6, 2, 2, 4);
  for (const auto& set : s.pair_sets) {
    // free of cluster c means no (x, c) entry at all; spot-check cluster 3
    bool free3 = true;
    for (auto [x, c] : set)
      if (c == 3) free3 = false;
    if (free3)
      for (auto [x, c] : set) CHECK(c != 3);
  }
}

TEST_CASE("determinism: same parameters give bit-identical schedules") {
  auto a = build_wcss(8, 2, 2, 99);
  auto b = build_wcss(8, 2, 2, 99);
  CHECK(a == b);
  auto c = build_wss(12, 3, 123);
  auto d = build_wss(12, 3, 123);
  CHECK(c == d);
  auto e = build_wss(12, 3, 124);
  CHECK_FALSE(c == e);
}

namespace {
// greedily remove redundant sets until every remaining one is pivotal
Schedule prune_to_minimal(Schedule s, ScheduleKind kind, int N, int k, int l = 1) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < s.length(); ++i) {
      Schedule m = s;
      if (m.kind == ScheduleKind::Wcss)
        m.pair_sets.erase(m.pair_sets.begin() + i);
      else
        m.sets.erase(m.sets.begin() + i);
      if (verify_selector(m, kind, N, k, l).verified()) {
        s = std::move(m);
        changed = true;
        break;
      }
    }
  }
  return s;
}
}  // namespace

TEST_CASE("deleting a pivotal set is caught by the verifier") {
  auto s = prune_to_minimal(build_wss(6, 2, 17), ScheduleKind::Wss, 6, 2);
  auto pivots = pivotal_sets(s, ScheduleKind::Wss, 6, 2);
  REQUIRE(pivots.size() == s.length());  // minimal family: every set pivotal
  for (size_t i : pivots) {
    Schedule mutated = s;
    mutated.sets.erase(mutated.sets.begin() + i);
    auto cert = verify_selector(mutated, ScheduleKind::Wss, 6, 2);
    CHECK_FALSE(cert.verified());
    CHECK(cert.counterexample.has_value());
  }
}

TEST_CASE("verification declares oversized instances unverifiable") {
  Schedule s;
  s.kind = ScheduleKind::Ssf;
  s.N = 64;
  s.k = 8;
  auto cert = verify_selector(s, ScheduleKind::Ssf, 64, 8);
  CHECK(cert.outcome == SelectorCertificate::Outcome::TooLarge);
  CHECK_FALSE(cert.counterexample.has_value());
}

TEST_CASE("wcss per-set selection probability matches the sampling law") {
  // fixed tuple (X, C, cid, x, y); empirical hit rate over 1e5 sampled sets
  const int N = 30, k = 3, l = 4;
  const double p_cluster = 0.25 * std::pow(0.75, 4);
  const double p_elem = (1.0 / 3) * std::pow(2.0 / 3, 2) * (1.0 / 3);
  const double p = p_cluster * p_elem;
  const int64_t samples = 100000;
  auto s = detail::sample_wcss(N, k, l, 4242, samples);
  const std::vector<int> X{2, 9, 17};
  const std::vector<int> C{5, 6, 7, 8};
  const int cid = 3, x = 9, y = 21;
  int64_t hits = 0;
  for (const auto& set : s.pair_sets) {
    bool free_c = true, has_y = false;
    int sel = 0, selected = -1;
    for (auto [a, c] : set) {
      if (std::find(C.begin(), C.end(), c) != C.end()) free_c = false;
      if (c == cid) {
        if (a == y) has_y = true;
        if (std::find(X.begin(), X.end(), a) != X.end()) {
          ++sel;
          selected = a;
        }
      }
    }
    if (free_c && has_y && sel == 1 && selected == x) ++hits;
  }
  double phat = static_cast<double>(hits) / samples;
  double sigma = std::sqrt(p * (1 - p) / samples);
  CHECK(std::abs(phat - p) <= 3.0 * sigma);
}
