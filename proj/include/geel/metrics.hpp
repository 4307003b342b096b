#pragma once

// Graph statistics (degree, clustering, 4-node orbits) and Gaussian-TV MMD.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "geel/error.hpp"
#include "geel/graph.hpp"

namespace geel {

using StatVector = std::vector<double>;

inline constexpr std::size_t kClusteringBins = 100;
inline constexpr std::size_t kOrbitCount = 11;  // orbits 4..14 of the connected 4-node graphlets
inline constexpr std::size_t kFirstOrbit = 4;

/// Fraction of nodes at each degree 0..max.
inline StatVector degree_histogram(const Graph& g) {
  std::size_t max_deg = 0;
  for (NodeId u = 0; u < g.node_count(); ++u) max_deg = std::max(max_deg, g.degree(u));
  StatVector h(max_deg + 1, 0.0);
  if (g.node_count() == 0) return h;
  for (NodeId u = 0; u < g.node_count(); ++u) h[g.degree(u)] += 1.0;
  for (double& x : h) x /= static_cast<double>(g.node_count());
  return h;
}

inline std::size_t triangles_at(const Graph& g, NodeId u) {
  const auto nb = g.neighbors(u);
  std::size_t t = 0;
  for (std::size_t i = 0; i < nb.size(); ++i)
    for (std::size_t j = i + 1; j < nb.size(); ++j)
      if (g.has_edge(nb[i], nb[j])) ++t;
  return t;
}

/// Local clustering per node; 0 below degree 2.
inline std::vector<double> local_clustering(const Graph& g) {
  std::vector<double> c(g.node_count(), 0.0);
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const double d = static_cast<double>(g.degree(u));
    if (d >= 2) c[u] = 2.0 * static_cast<double>(triangles_at(g, u)) / (d * (d - 1.0));
  }
  return c;
}

/// Local clustering binned into 100 equal bins on [0, 1] (1.0 lands in the last), normalized.
inline StatVector clustering_histogram(const Graph& g) {
  StatVector h(kClusteringBins, 0.0);
  if (g.node_count() == 0) return h;
  for (double c : local_clustering(g)) {
    const auto bin = std::min(kClusteringBins - 1, static_cast<std::size_t>(c * static_cast<double>(kClusteringBins)));
    h[bin] += 1.0;
  }
  for (double& x : h) x /= static_cast<double>(g.node_count());
  return h;
}

using OrbitRow = std::array<std::size_t, kOrbitCount>;

/// Orbit index (0-based within 4..14) of each node of a connected induced
/// 4-node subgraph, given the in-subgraph degrees and edge count.
inline std::array<std::size_t, 4> classify_graphlet(const std::array<std::size_t, 4>& deg, std::size_t edges) {
  std::array<std::size_t, 4> orbit{};
  const std::size_t max_deg = *std::max_element(deg.begin(), deg.end());
  for (std::size_t i = 0; i < 4; ++i) {
    std::size_t o = 0;
    switch (edges) {
      case 3: o = max_deg == 3 ? (deg[i] == 3 ? 7 : 6) : (deg[i] == 1 ? 4 : 5); break;
      case 4: o = max_deg == 2 ? 8 : (deg[i] == 1 ? 9 : deg[i] == 2 ? 10 : 11); break;
      case 5: o = deg[i] == 2 ? 12 : 13; break;
      case 6: o = 14; break;
      default: throw ArgumentError("classify_graphlet: not a connected 4-node graph");
    }
    orbit[i] = o - kFirstOrbit;
  }
  return orbit;
}

namespace detail {

inline void tally_subset(const Graph& g, const std::array<NodeId, 4>& s, std::vector<OrbitRow>& counts) {
  std::array<std::size_t, 4> deg{};
  std::size_t edges = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j)
      if (g.has_edge(s[i], s[j])) {
        ++deg[i];
        ++deg[j];
        ++edges;
      }
  const auto orbit = classify_graphlet(deg, edges);
  for (std::size_t i = 0; i < 4; ++i) ++counts[s[i]][orbit[i]];
}

// Enumerates each connected 4-subset once: extensions only add nodes with id
// above the root that are neighbors of the newest node but of no earlier one.
inline void extend(const Graph& g, std::array<NodeId, 4>& sub, std::size_t size, std::vector<NodeId> ext, NodeId root,
                   std::vector<OrbitRow>& counts) {
  if (size == 4) {
    tally_subset(g, sub, counts);
    return;
  }
  while (!ext.empty()) {
    const NodeId w = ext.back();
    ext.pop_back();
    std::vector<NodeId> next = ext;
    for (NodeId u : g.neighbors(w)) {
      if (u <= root) continue;
      bool excluded = false;
      for (std::size_t i = 0; i < size && !excluded; ++i) excluded = u == sub[i] || g.has_edge(u, sub[i]);
      if (!excluded && std::find(next.begin(), next.end(), u) == next.end()) next.push_back(u);
    }
    sub[size] = w;
    extend(g, sub, size + 1, std::move(next), root, counts);
  }
}

}  // namespace detail

/// Per-node participation counts in orbits 4..14.
inline std::vector<OrbitRow> orbit_counts_per_node(const Graph& g) {
  std::vector<OrbitRow> counts(g.node_count(), OrbitRow{});
  std::array<NodeId, 4> sub{};
  for (NodeId v = 0; v < g.node_count(); ++v) {
    std::vector<NodeId> ext;
    for (NodeId u : g.neighbors(v))
      if (u > v) ext.push_back(u);
    sub[0] = v;
    detail::extend(g, sub, 1, std::move(ext), v, counts);
  }
  return counts;
}

/// Mean per-node count of each of the 11 orbits.
inline StatVector orbit_counts_4(const Graph& g) {
  StatVector mean(kOrbitCount, 0.0);
  if (g.node_count() == 0) return mean;
  for (const auto& row : orbit_counts_per_node(g))
    for (std::size_t o = 0; o < kOrbitCount; ++o) mean[o] += static_cast<double>(row[o]);
  for (double& x : mean) x /= static_cast<double>(g.node_count());
  return mean;
}

// ---- MMD ------------------------------------------------------------------

/// Copy scaled to sum 1 (all-zero vectors stay zero), padded to `length`.
inline StatVector normalized(const StatVector& v, std::size_t length) {
  StatVector out(length, 0.0);
  double total = 0.0;
  for (double x : v) total += x;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = total > 0.0 ? v[i] / total : 0.0;
  return out;
}

inline double total_variation(const StatVector& x, const StatVector& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d += std::abs(x[i] - y[i]);
  return 0.5 * d;
}

inline double gaussian_tv_kernel(const StatVector& x, const StatVector& y, double sigma) {
  const double d = total_variation(x, y);
  return std::exp(-d * d / (2.0 * sigma * sigma));
}

/// Biased squared MMD: mean k(a,a') + mean k(b,b') - 2 mean k(a,b).
inline double mmd(std::span<const StatVector> a, std::span<const StatVector> b, double sigma = 1.0) {
  if (a.empty() || b.empty()) throw ArgumentError("mmd: empty sample set");
  if (!(sigma > 0.0)) throw ArgumentError("mmd: sigma must be positive");
  std::size_t length = 0;
  for (const auto& v : a) length = std::max(length, v.size());
  for (const auto& v : b) length = std::max(length, v.size());
  std::vector<StatVector> x, y;
  for (const auto& v : a) x.push_back(normalized(v, length));
  for (const auto& v : b) y.push_back(normalized(v, length));
  auto mean_kernel = [&](const std::vector<StatVector>& p, const std::vector<StatVector>& q) {
    double s = 0.0;
    for (const auto& u : p)
      for (const auto& v : q) s += gaussian_tv_kernel(u, v, sigma);
    return s / static_cast<double>(p.size() * q.size());
  };
  return mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y);
}

struct MmdReport {
  double degree = 0.0;
  double clustering = 0.0;
  double orbit = 0.0;
  double sigma = 1.0;
  std::size_t n_generated = 0;
  std::size_t n_reference = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    return {{"degree_mmd", degree},   {"clustering_mmd", clustering}, {"orbit_mmd", orbit},
            {"kernel", "gaussian-tv"}, {"sigma", sigma},               {"n_generated", n_generated},
            {"n_reference", n_reference}, {"warnings", warnings}};
  }

  std::string to_csv() const {
    std::string out = "statistic,value,sigma,n_generated,n_reference\n";
    for (const auto& [name, v] : {std::pair{"degree", degree}, {"clustering", clustering}, {"orbit", orbit}}) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%zu,%zu\n", name, v, sigma, n_generated, n_reference);
      out += buf;
    }
    return out;
  }
};

/// The larger set is truncated to the smaller one's size, with a warning.
inline MmdReport evaluate(std::span<const Graph> generated, std::span<const Graph> reference, double sigma = 1.0) {
  if (generated.empty() || reference.empty()) throw ArgumentError("evaluate: empty graph set");
  MmdReport r;
  r.sigma = sigma;
  const std::size_t n = std::min(generated.size(), reference.size());
  if (generated.size() != reference.size())
    r.warnings.push_back("set sizes differ (" + std::to_string(generated.size()) + " generated, " +
                         std::to_string(reference.size()) + " reference); truncated to " + std::to_string(n));
  generated = generated.first(n);
  reference = reference.first(n);
  r.n_generated = r.n_reference = n;
  auto stats = [](std::span<const Graph> gs, StatVector (*f)(const Graph&)) {
    std::vector<StatVector> out;
    for (const auto& g : gs) out.push_back(f(g));
    return out;
  };
  r.degree = mmd(stats(generated, degree_histogram), stats(reference, degree_histogram), sigma);
  r.clustering = mmd(stats(generated, clustering_histogram), stats(reference, clustering_histogram), sigma);
  r.orbit = mmd(stats(generated, orbit_counts_4), stats(reference, orbit_counts_4), sigma);
  return r;
}

}  // namespace geel
