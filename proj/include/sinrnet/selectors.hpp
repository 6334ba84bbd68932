#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sinrnet/common.hpp"

namespace sinrnet {

enum class ScheduleKind { Ssf, Wss, Wcss, Explicit };

inline const char* to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::Ssf: return "ssf";
    case ScheduleKind::Wss: return "wss";
    case ScheduleKind::Wcss: return "wcss";
    case ScheduleKind::Explicit: return "explicit";
  }
  return "?";
}

inline std::optional<ScheduleKind> schedule_kind_from(const std::string& s) {
  if (s == "ssf") return ScheduleKind::Ssf;
  if (s == "wss") return ScheduleKind::Wss;
  if (s == "wcss") return ScheduleKind::Wcss;
  if (s == "explicit") return ScheduleKind::Explicit;
  return std::nullopt;
}

// A transmission schedule: the i-th set lists who transmits in round i. For
// ssf/wss the entries are IDs; for wcss they are (ID, cluster) pairs.
struct Schedule {
  ScheduleKind kind = ScheduleKind::Explicit;
  int N = 0;
  int k = 0;
  int l = 0;
  uint64_t seed = 0;
  bool certified = false;
  std::vector<std::vector<int>> sets;                        // ssf/wss
  std::vector<std::vector<std::pair<int, int>>> pair_sets;   // wcss

  size_t length() const { return kind == ScheduleKind::Wcss ? pair_sets.size() : sets.size(); }

  bool operator==(const Schedule& o) const {
    return kind == o.kind && N == o.N && k == o.k && l == o.l && sets == o.sets &&
           pair_sets == o.pair_sets;
  }
};

struct SelectorCounterexample {
  std::vector<int> X;
  int x = -1;
  int y = -1;
  std::vector<int> C;
  int cluster = -1;
};

struct SelectorCertificate {
  enum class Outcome { Certified, CounterexampleFound, TooLarge };
  Outcome outcome = Outcome::TooLarge;
  std::optional<SelectorCounterexample> counterexample;
  int64_t pairs_checked = 0;

  bool verified() const { return outcome == Outcome::Certified; }
};

namespace detail {

inline double log_choose(int n, int k) {
  if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double ssf_hit_prob(int k) {
  return (1.0 / k) * std::pow(1.0 - 1.0 / k, k - 1);
}

inline double wss_hit_prob(int k) { return ssf_hit_prob(k) / k; }

// cluster-inclusion probability; 1/l degenerates at l = 1
inline double wcss_cluster_prob(int l) { return l == 1 ? 0.5 : 1.0 / l; }

inline double wcss_hit_prob(int k, int l) {
  double ql = wcss_cluster_prob(l);
  return ql * std::pow(1.0 - ql, l) * wss_hit_prob(k);
}

inline int64_t sampled_length(double log_tuples, double p) {
  double m = 2.0 * (log_tuples + std::log(2.0)) / p;
  return std::max<int64_t>(4, static_cast<int64_t>(std::ceil(m)));
}

// enumerate k-subsets of [1..N] as bitmasks (N <= 62)
template <typename F>
void for_each_subset(int N, int k, F&& f) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i + 1;
  while (true) {
    uint64_t m = 0;
    for (int v : idx) m |= (uint64_t(1) << v);
    if (!f(m)) return;
    int i = k - 1;
    while (i >= 0 && idx[i] == N - (k - 1 - i)) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline std::vector<int> mask_to_ids(uint64_t m) {
  std::vector<int> out;
  for (int v = 0; v < 64; ++v)
    if (m & (uint64_t(1) << v)) out.push_back(v);
  return out;
}

}  // namespace detail

struct SelectorLengths {
  // paper-shaped target lengths from the union-bound, doubled for margin
  static int64_t ssf(int N, int k) {
    if (k == 1) return N;
    double lt = detail::log_choose(N, k) + std::log(static_cast<double>(k));
    return detail::sampled_length(lt, detail::ssf_hit_prob(k));
  }
  static int64_t wss(int N, int k) {
    double lt = detail::log_choose(N, k) + std::log(static_cast<double>(k)) +
                std::log(std::max(1.0, static_cast<double>(N - k)));
    return detail::sampled_length(lt, detail::wss_hit_prob(k));
  }
  static int64_t wcss(int N, int k, int l) {
    double lt = (k + l + 3) * std::log(static_cast<double>(N));
    return detail::sampled_length(lt, detail::wcss_hit_prob(k, l));
  }
};

SelectorCertificate verify_selector(const Schedule& s, ScheduleKind kind, int N, int k, int l = 1);

namespace detail {

inline Schedule sample_ssf(int N, int k, uint64_t seed, int64_t length) {
  Schedule s;
  s.kind = ScheduleKind::Ssf;
  s.N = N;
  s.k = k;
  s.seed = seed;
  Rng rng(seed);
  s.sets.resize(length);
  for (auto& set : s.sets)
    for (int x = 1; x <= N; ++x)
      if (rng.bernoulli(1.0 / k)) set.push_back(x);
  return s;
}

inline Schedule sample_wss(int N, int k, uint64_t seed, int64_t length) {
  Schedule s = sample_ssf(N, k, seed, length);
  s.kind = ScheduleKind::Wss;
  return s;
}

inline Schedule sample_wcss(int N, int k, int l, uint64_t seed, int64_t length) {
  Schedule s;
  s.kind = ScheduleKind::Wcss;
  s.N = N;
  s.k = k;
  s.l = l;
  s.seed = seed;
  Rng rng(seed);
  const double ql = wcss_cluster_prob(l);
  s.pair_sets.resize(length);
  std::vector<int> allowed;
  for (auto& set : s.pair_sets) {
    allowed.clear();
    for (int c = 1; c <= N; ++c)
      if (rng.bernoulli(ql)) allowed.push_back(c);
    for (int c : allowed)
      for (int x = 1; x <= N; ++x)
        if (rng.bernoulli(1.0 / k)) set.push_back({x, c});
    std::sort(set.begin(), set.end());
  }
  return s;
}

}  // namespace detail

// Las-Vegas constructions: sampled per the probabilistic argument, verified
// exhaustively and resampled while a certificate is feasible at this size,
// returned unverified (with the recorded seed) beyond that.
inline Schedule build_ssf(int N, int k, uint64_t seed, int64_t length_override = 0) {
  if (k < 1 || k > N) throw ParameterError("build_ssf: need 1 <= k <= N");
  if (k == 1 && length_override == 0) {
    // singletons certify trivially for every N
    Schedule s;
    s.kind = ScheduleKind::Ssf;
    s.N = N;
    s.k = 1;
    s.seed = seed;
    s.certified = true;
    for (int x = 1; x <= N; ++x) s.sets.push_back({x});
    return s;
  }
  int64_t len = length_override > 0 ? length_override : SelectorLengths::ssf(N, k);
  const bool certify = length_override == 0 && N <= 20 && k <= 4;
  for (int attempt = 0;; ++attempt) {
    Schedule s = detail::sample_ssf(N, k, seed + 0x9e3779b97f4a7c15ull * attempt, len);
    if (!certify) return s;
    auto cert = verify_selector(s, ScheduleKind::Ssf, N, k);
    if (cert.verified()) {
      s.certified = true;
      return s;
    }
    if (attempt > 200) throw ContractError("build_ssf: certification failed repeatedly");
  }
}

inline Schedule build_wss(int N, int k, uint64_t seed, int64_t length_override = 0) {
  if (k < 1 || k > N) throw ParameterError("build_wss: need 1 <= k <= N");
  int64_t len = length_override > 0 ? length_override : SelectorLengths::wss(N, k);
  const bool certify = length_override == 0 && N <= 12 && k <= 3;
  for (int attempt = 0;; ++attempt) {
    Schedule s = detail::sample_wss(N, k, seed + 0x9e3779b97f4a7c15ull * attempt, len);
    if (!certify) return s;
    auto cert = verify_selector(s, ScheduleKind::Wss, N, k);
    if (cert.verified()) {
      s.certified = true;
      return s;
    }
    if (attempt > 200) throw ContractError("build_wss: certification failed repeatedly");
  }
}

inline Schedule build_wcss(int N, int k, int l, uint64_t seed, int64_t length_override = 0) {
  if (k < 1 || k > N || l < 1 || l > N) throw ParameterError("build_wcss: need 1 <= k, l <= N");
  int64_t len = length_override > 0 ? length_override : SelectorLengths::wcss(N, k, l);
  const bool certify = length_override == 0 && N <= 8 && k <= 2 && l <= 2;
  for (int attempt = 0;; ++attempt) {
    Schedule s = detail::sample_wcss(N, k, l, seed + 0x9e3779b97f4a7c15ull * attempt, len);
    if (!certify) return s;
    auto cert = verify_selector(s, ScheduleKind::Wcss, N, k, l);
    if (cert.verified()) {
      s.certified = true;
      return s;
    }
    if (attempt > 200) throw ContractError("build_wcss: certification failed repeatedly");
  }
}

// Exhaustive verification over every required (X, x, y[, C]) tuple; the
// first failure is returned as a counterexample. Instances beyond the
// enumeration budget report TooLarge, a distinct outcome from failure.
inline SelectorCertificate verify_selector(const Schedule& s, ScheduleKind kind, int N, int k, int l) {
  SelectorCertificate cert;
  if (N > 62) {
    cert.outcome = SelectorCertificate::Outcome::TooLarge;
    return cert;
  }
  double work = std::exp(detail::log_choose(N, k)) * N * N *
                (kind == ScheduleKind::Wcss ? std::exp(detail::log_choose(N, l)) : 1.0);
  if (work > 1e8) {
    cert.outcome = SelectorCertificate::Outcome::TooLarge;
    return cert;
  }
  const uint64_t full = (N >= 63) ? ~uint64_t(1) : ((uint64_t(1) << (N + 1)) - 2);  // bits 1..N

  if (kind == ScheduleKind::Ssf) {
    std::vector<uint64_t> set_masks;
    for (const auto& set : s.sets) {
      uint64_t m = 0;
      for (int v : set) m |= (uint64_t(1) << v);
      set_masks.push_back(m);
    }
    bool ok = true;
    for (int sz = 1; sz <= k && ok; ++sz) {
      detail::for_each_subset(N, sz, [&](uint64_t X) {
        uint64_t selected = 0;
        for (uint64_t S : set_masks) {
          uint64_t t = S & X;
          if (t && !(t & (t - 1))) selected |= t;
        }
        ++cert.pairs_checked;
        if (selected != X) {
          uint64_t missing = X & ~selected;
          cert.counterexample = SelectorCounterexample{detail::mask_to_ids(X),
                                                       detail::mask_to_ids(missing & (~missing + 1)).front(),
                                                       -1, {}, -1};
          ok = false;
          return false;
        }
        return true;
      });
    }
    cert.outcome = ok ? SelectorCertificate::Outcome::Certified
                      : SelectorCertificate::Outcome::CounterexampleFound;
    return cert;
  }

  if (kind == ScheduleKind::Wss) {
    std::vector<uint64_t> set_masks;
    for (const auto& set : s.sets) {
      uint64_t m = 0;
      for (int v : set) m |= (uint64_t(1) << v);
      set_masks.push_back(m);
    }
    bool ok = true;
    std::vector<uint64_t> witnessed(N + 1);
    detail::for_each_subset(N, k, [&](uint64_t X) {
      for (int v = 1; v <= N; ++v) witnessed[v] = 0;
      for (uint64_t S : set_masks) {
        uint64_t t = S & X;
        if (t && !(t & (t - 1))) {
          int x = static_cast<int>(std::countr_zero(t));
          witnessed[x] |= S & ~X;
        }
      }
      for (int x = 1; x <= N; ++x) {
        if (!(X & (uint64_t(1) << x))) continue;
        uint64_t need = full & ~X;
        ++cert.pairs_checked;
        if ((witnessed[x] & need) != need) {
          uint64_t miss = need & ~witnessed[x];
          cert.counterexample = SelectorCounterexample{
              detail::mask_to_ids(X), x, static_cast<int>(std::countr_zero(miss & (~miss + 1))), {}, -1};
          ok = false;
          return false;
        }
      }
      return true;
    });
    cert.outcome = ok ? SelectorCertificate::Outcome::Certified
                      : SelectorCertificate::Outcome::CounterexampleFound;
    return cert;
  }

  if (kind == ScheduleKind::Wcss) {
    const size_t m = s.pair_sets.size();
    // per set: clusters present, and the id-projection per cluster
    std::vector<uint64_t> present(m, 0);
    std::vector<std::vector<uint64_t>> proj(m, std::vector<uint64_t>(N + 1, 0));
    for (size_t i = 0; i < m; ++i)
      for (auto [x, c] : s.pair_sets[i]) {
        if (c < 1 || c > N || x < 1 || x > N) continue;
        present[i] |= (uint64_t(1) << c);
        proj[i][c] |= (uint64_t(1) << x);
      }
    bool ok = true;
    std::vector<uint64_t> witnessed(N + 1);
    for (int cid = 1; cid <= N && ok; ++cid) {
      detail::for_each_subset(N, k, [&](uint64_t X) {
        bool cont = true;
        detail::for_each_subset(N, l, [&](uint64_t C) {
          if (C & (uint64_t(1) << cid)) return true;  // cluster must avoid its own conflict set
          for (int v = 1; v <= N; ++v) witnessed[v] = 0;
          for (size_t i = 0; i < m; ++i) {
            if (present[i] & C) continue;  // not free of the conflicting clusters
            uint64_t t = proj[i][cid] & X;
            if (t && !(t & (t - 1)))
              witnessed[std::countr_zero(t)] |= proj[i][cid] & ~X;
          }
          for (int x = 1; x <= N; ++x) {
            if (!(X & (uint64_t(1) << x))) continue;
            uint64_t need = full & ~X;
            ++cert.pairs_checked;
            if ((witnessed[x] & need) != need) {
              uint64_t miss = need & ~witnessed[x];
              cert.counterexample =
                  SelectorCounterexample{detail::mask_to_ids(X), x,
                                         static_cast<int>(std::countr_zero(miss & (~miss + 1))),
                                         detail::mask_to_ids(C), cid};
              ok = cont = false;
              return false;
            }
          }
          return true;
        });
        return cont;
      });
    }
    cert.outcome = ok ? SelectorCertificate::Outcome::Certified
                      : SelectorCertificate::Outcome::CounterexampleFound;
    return cert;
  }

  cert.outcome = SelectorCertificate::Outcome::TooLarge;
  return cert;
}

// Sets whose deletion breaks some tuple's only witness. Used by mutation
// tests: deleting any of these must flip verification to a counterexample.
inline std::vector<size_t> pivotal_sets(const Schedule& s, ScheduleKind kind, int N, int k, int l = 1) {
  std::vector<size_t> out;
  for (size_t i = 0; i < s.length(); ++i) {
    Schedule mutated = s;
    if (mutated.kind == ScheduleKind::Wcss)
      mutated.pair_sets.erase(mutated.pair_sets.begin() + i);
    else
      mutated.sets.erase(mutated.sets.begin() + i);
    if (!verify_selector(mutated, kind, N, k, l).verified()) out.push_back(i);
  }
  return out;
}

}  // namespace sinrnet
