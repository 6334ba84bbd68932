#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sinrnet/clustering.hpp"
#include "sinrnet/sinr.hpp"

namespace sinrnet {

struct GeneratedNetwork {
  Network net;
  int n = 0;
  int64_t diameter = 0;
  int max_degree = 0;
  int64_t density_measured = 0;
  ClusterAssignment blobs;  // only for the blob generator
  int attempts = 1;
};

inline int next_pow2_at_least(int n) {
  int v = 1;
  while (v < n) v <<= 1;
  return v;
}

namespace gen {

// Uniform positions in a square sized for the target unit-ball density;
// resamples until the communication graph is connected.
inline GeneratedNetwork uniform_random(int n, double target_density, SinrParams proto, uint64_t seed,
                                       int max_attempts = 300) {
  if (n < 1) throw ParameterError("uniform_random: n must be positive");
  proto = SinrParams::make(proto.alpha, proto.beta, proto.noise, proto.epsilon,
                           std::max(proto.id_bound, next_pow2_at_least(2 * n)));
  const double side = std::max(1.0, std::sqrt(n * 3.141592653589793 / std::max(1.0, target_density)));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ull * attempt);
    std::vector<NetNode> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({i + 1, {rng.unit() * side, rng.unit() * side}});
    Network net;
    try {
      net = Network::make(proto, nodes);
    } catch (const ParameterError&) {
      continue;  // coincident points
    }
    auto g = communication_graph(net);
    if (n > 1 && !g.connected) continue;
    GeneratedNetwork out{std::move(net), n, g.diameter, g.max_degree, 0, {}, attempt + 1};
    auto placed = out.net.placed();
    out.density_measured = density(placed, nullptr);
    return out;
  }
  throw ParameterError("uniform_random: no connected sample within the retry budget");
}

inline GeneratedNetwork grid(int rows, int cols, SinrParams proto, double spacing = -1.0) {
  if (rows < 1 || cols < 1) throw ParameterError("grid: dimensions must be positive");
  proto = SinrParams::make(proto.alpha, proto.beta, proto.noise, proto.epsilon,
                           std::max(proto.id_bound, next_pow2_at_least(2 * rows * cols)));
  if (spacing <= 0) spacing = 1.0 - proto.epsilon;
  std::vector<NetNode> nodes;
  int id = 1;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) nodes.push_back({id++, {c * spacing, r * spacing}});
  GeneratedNetwork out;
  out.net = Network::make(proto, nodes);
  out.n = rows * cols;
  auto g = communication_graph(out.net);
  out.diameter = g.diameter;
  out.max_degree = g.max_degree;
  auto placed = out.net.placed();
  out.density_measured = density(placed, nullptr);
  return out;
}

inline GeneratedNetwork line(int n, SinrParams proto, double spacing = -1.0) {
  if (n < 1) throw ParameterError("line: n must be positive");
  proto = SinrParams::make(proto.alpha, proto.beta, proto.noise, proto.epsilon,
                           std::max(proto.id_bound, next_pow2_at_least(2 * n)));
  if (spacing <= 0) spacing = 1.0 - proto.epsilon;
  std::vector<NetNode> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({i + 1, {i * spacing, 0.0}});
  GeneratedNetwork out;
  out.net = Network::make(proto, nodes);
  out.n = n;
  auto g = communication_graph(out.net);
  out.diameter = g.diameter;
  out.max_degree = g.max_degree;
  auto placed = out.net.placed();
  out.density_measured = density(placed, nullptr);
  return out;
}

// Disc-shaped clusters around well-separated centers: a ready-made
// r-clustering (cluster id = center node id, first node of each blob at the
// center).
inline GeneratedNetwork cluster_blobs(int blobs, int per_blob, double radius, double center_gap,
                                      SinrParams proto, uint64_t seed) {
  if (blobs < 1 || per_blob < 1) throw ParameterError("cluster_blobs: counts must be positive");
  int n = blobs * per_blob;
  proto = SinrParams::make(proto.alpha, proto.beta, proto.noise, proto.epsilon,
                           std::max(proto.id_bound, next_pow2_at_least(2 * n)));
  Rng rng(seed);
  GeneratedNetwork out;
  std::vector<NetNode> nodes;
  int side_count = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(blobs))));
  int id = 1;
  for (int b = 0; b < blobs; ++b) {
    double cx = (b % side_count) * center_gap;
    double cy = (b / side_count) * center_gap;
    NodeId center_id = id;
    nodes.push_back({id++, {cx, cy}});
    out.blobs.cluster_of[center_id] = center_id;
    out.blobs.center_of[center_id] = center_id;
    for (int i = 1; i < per_blob; ++i) {
      double ang = rng.unit() * 6.283185307179586;
      double rad = std::sqrt(rng.unit()) * radius;
      nodes.push_back({id, {cx + rad * std::cos(ang), cy + rad * std::sin(ang)}});
      out.blobs.cluster_of[id] = center_id;
      ++id;
    }
  }
  out.net = Network::make(proto, nodes);
  out.n = n;
  auto g = communication_graph(out.net);
  out.diameter = g.diameter;
  out.max_degree = g.max_degree;
  auto placed = out.net.placed();
  out.density_measured = density(placed, &out.blobs);
  return out;
}

}  // namespace gen

}  // namespace sinrnet
