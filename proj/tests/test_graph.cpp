#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

#include "geel/datasets.hpp"
#include "geel/graph.hpp"

using namespace geel;

namespace {

Graph make(std::size_t n, std::vector<std::pair<NodeId, NodeId>> edges) { return Graph::from_edges(n, edges); }

Graph path(std::size_t n) { return gen_path(n); }

Graph cycle(std::size_t n) {
  Graph g = gen_path(n);
  g.add_edge(0, n - 1);
  return g;
}

Graph star(std::size_t leaves) {
  Graph g(leaves + 1);
  for (NodeId v = 1; v <= leaves; ++v) g.add_edge(0, v);
  return g;
}

// Exact minimum bandwidth over all N! orderings.
std::size_t min_bandwidth_brute_force(const Graph& g) {
  std::vector<Rank> ranks(g.node_count());
  std::iota(ranks.begin(), ranks.end(), Rank{1});
  std::size_t best = g.node_count();
  do {
    best = std::min(best, bandwidth(g, Ordering::from_ranks(ranks)));
  } while (std::next_permutation(ranks.begin(), ranks.end()));
  return best;
}

// Straight-line C-M: queue, sort unvisited neighbors by (degree, id).
std::vector<NodeId> cm_oracle(const Graph& g) {
  NodeId start = 0;
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (g.degree(u) < g.degree(start)) start = u;
  std::vector<NodeId> visit{start};
  std::vector<bool> seen(g.node_count(), false);
  seen[start] = true;
  std::deque<NodeId> q{start};
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    std::vector<NodeId> nb;
    for (NodeId v : g.neighbors(u))
      if (!seen[v]) nb.push_back(v);
    std::sort(nb.begin(), nb.end(), [&](NodeId a, NodeId b) {
      return g.degree(a) != g.degree(b) ? g.degree(a) < g.degree(b) : a < b;
    });
    for (NodeId v : nb) {
      seen[v] = true;
      visit.push_back(v);
      q.push_back(v);
    }
  }
  return visit;
}

void expect_bijection(const Ordering& pi, std::size_t n) {
  ASSERT_EQ(pi.size(), n);
  for (NodeId u = 0; u < n; ++u) {
    EXPECT_GE(pi.rank(u), 1u);
    EXPECT_LE(pi.rank(u), n);
    EXPECT_EQ(pi.node_at(pi.rank(u)), u);
  }
}

}  // namespace

TEST(Graph, AdjacencyIsSymmetricAndSorted) {
  const Graph g = make(4, {{2, 0}, {0, 1}, {3, 0}, {1, 2}});
  EXPECT_EQ(g.edge_count(), 4u);
  const auto nb = g.neighbors(0);
  EXPECT_EQ(std::vector<NodeId>(nb.begin(), nb.end()), (std::vector<NodeId>{1, 2, 3}));
  std::size_t degree_sum = 0;
  for (NodeId u = 0; u < 4; ++u) {
    degree_sum += g.degree(u);
    for (NodeId v : g.neighbors(u)) EXPECT_TRUE(g.has_edge(v, u));
  }
  EXPECT_EQ(degree_sum / 2, g.edge_count());
  EXPECT_EQ(g.edges(), (std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {0, 2}, {0, 3}, {1, 2}}));
}

TEST(Graph, RejectsSelfLoopsDuplicatesAndRange) {
  Graph g(3);
  EXPECT_THROW(g.add_edge(1, 1), ArgumentError);
  g.add_edge(0, 1);
  EXPECT_THROW(g.add_edge(1, 0), ArgumentError);
  EXPECT_THROW(g.add_edge(0, 3), ArgumentError);
}

TEST(Ordering, RanksMustBePermutation) {
  EXPECT_THROW(Ordering::from_ranks({1, 1, 2}), ArgumentError);
  EXPECT_THROW(Ordering::from_ranks({0, 1, 2}), ArgumentError);
  EXPECT_THROW(Ordering::from_visit_order({0, 0}), ArgumentError);
  const auto pi = Ordering::from_ranks({3, 1, 2});
  EXPECT_EQ(pi.node_at(1), 1u);
  EXPECT_EQ(pi.reversed().rank(0), 1u);
  expect_bijection(pi, 3);
}

TEST(Connectivity, Examples) {
  EXPECT_TRUE(is_connected(path(3)));
  EXPECT_FALSE(is_connected(make(4, {{0, 1}, {2, 3}})));
  EXPECT_TRUE(is_connected(Graph(1)));
}

TEST(Connectivity, LargestComponent) {
  const auto c = largest_connected_component(make(6, {{0, 1}, {2, 3}, {3, 4}, {4, 2}}));
  EXPECT_EQ(c.kept, (std::vector<NodeId>{2, 3, 4}));
  EXPECT_EQ(c.graph.edge_count(), 3u);
  EXPECT_TRUE(is_connected(c.graph));
}

TEST(Bandwidth, Examples) {
  EXPECT_EQ(bandwidth(path(4), Ordering::identity(4)), 1u);
  EXPECT_EQ(bandwidth(cycle(4), Ordering::identity(4)), 3u);
  EXPECT_EQ(bandwidth(Graph(3), Ordering::identity(3)), 0u);
  EXPECT_THROW(bandwidth(path(4), Ordering::identity(3)), DimensionError);
}

TEST(Bandwidth, InvariantUnderRelabeling) {
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const Graph g = gen_random_connected(2 + k % 15, 0.2, rng);
    const Ordering pi = random_ordering(g, rng);
    EXPECT_EQ(bandwidth(apply_ordering(g, pi), Ordering::identity(g.node_count())), bandwidth(g, pi));
  }
}

TEST(CuthillMcKee, PathReachesBandwidthOne) {
  Rng rng(1);
  EXPECT_EQ(bandwidth(path(4), cuthill_mckee(path(4))), 1u);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(bandwidth(path(4), cuthill_mckee(path(4), StartPolicy::sampled, &rng)), 1u);
}

TEST(CuthillMcKee, CycleAttainsOptimumTwo) {
  EXPECT_EQ(min_bandwidth_brute_force(cycle(4)), 2u);
  EXPECT_EQ(bandwidth(cycle(4), cuthill_mckee(cycle(4))), 2u);
}

TEST(CuthillMcKee, StarStartsAtLeaf) {
  const Graph g = star(3);  // center 0
  const Ordering pi = cuthill_mckee(g);
  EXPECT_EQ(pi.rank(1), 1u);  // lowest-id minimum-degree node
  EXPECT_EQ(pi.rank(0), 2u);
  // every policy-reachable ordering puts a leaf first, the center second
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Ordering s = cuthill_mckee(g, StartPolicy::sampled, &rng);
    EXPECT_EQ(s.rank(0), 2u);
    EXPECT_EQ(bandwidth(g, s), 2u);
  }
  EXPECT_EQ(bandwidth(g, pi), 2u);
}

TEST(CuthillMcKee, MatchesOracle) {
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    const Graph g = gen_random_connected(1 + k % 30, 0.1, rng);
    const Ordering pi = cuthill_mckee(g);
    const auto visit = pi.visit_order();
    EXPECT_EQ(std::vector<NodeId>(visit.begin(), visit.end()), cm_oracle(g));
  }
}

TEST(CuthillMcKee, ReverseOption) {
  Rng rng(5);
  const Graph g = gen_random_connected(12, 0.2, rng);
  EXPECT_EQ(cuthill_mckee(g, StartPolicy::deterministic, nullptr, true), cuthill_mckee(g).reversed());
}

TEST(CuthillMcKee, SampledNeedsRngAndConnectivity) {
  EXPECT_THROW(cuthill_mckee(path(3), StartPolicy::sampled, nullptr), ArgumentError);
  EXPECT_THROW(cuthill_mckee(make(4, {{0, 1}, {2, 3}})), ConnectivityError);
}

TEST(CuthillMcKee, SampledStartIsMinimumDegree) {
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const Graph g = gen_random_connected(3 + k % 20, 0.15, rng);
    std::size_t min_deg = g.node_count();
    for (NodeId u = 0; u < g.node_count(); ++u) min_deg = std::min(min_deg, g.degree(u));
    const Ordering pi = cuthill_mckee(g, StartPolicy::sampled, &rng);
    EXPECT_EQ(g.degree(pi.node_at(1)), min_deg);
    expect_bijection(pi, g.node_count());
  }
}

TEST(CuthillMcKee, NeverBeatsExactMinimum) {
  Rng rng(21);
  for (int k = 0; k < 60; ++k) {
    const Graph g = gen_random_connected(2 + k % 7, 0.3, rng);  // N <= 8
    EXPECT_GE(bandwidth(g, cuthill_mckee(g)), min_bandwidth_brute_force(g));
  }
}

TEST(CuthillMcKee, MedianBelowRandomOrdering) {
  Rng rng(33);
  std::vector<std::size_t> cm, rnd;
  for (int k = 0; k < 200; ++k) {
    const Graph g = gen_random_connected(5 + k % 36, 0.05, rng);  // N <= 40
    cm.push_back(bandwidth(g, cuthill_mckee(g)));
    rnd.push_back(bandwidth(g, random_ordering(g, rng)));
  }
  std::nth_element(cm.begin(), cm.begin() + 100, cm.end());
  std::nth_element(rnd.begin(), rnd.begin() + 100, rnd.end());
  EXPECT_LE(cm[100], rnd[100]);
}

TEST(Traversals, BfsOnPathFromFirstNodeIsIdentity) {
  EXPECT_EQ(bfs_ordering_from(path(4), 0), Ordering::identity(4));
}

TEST(Traversals, DfsOnTriangle) {
  const Graph tri = make(3, {{0, 1}, {1, 2}, {0, 2}});
  const Ordering pi = dfs_ordering_from(tri, 0);
  EXPECT_EQ(pi, Ordering::identity(3));
  EXPECT_EQ(bandwidth(tri, pi), 2u);
}

TEST(Traversals, DfsGoesDeepFirst) {
  // 0-1, 0-2, 1-3: DFS from 0 visits 0,1,3,2; BFS visits 0,1,2,3
  const Graph g = make(4, {{0, 1}, {0, 2}, {1, 3}});
  const auto d = dfs_ordering_from(g, 0).visit_order();
  EXPECT_EQ(std::vector<NodeId>(d.begin(), d.end()), (std::vector<NodeId>{0, 1, 3, 2}));
  const auto b = bfs_ordering_from(g, 0).visit_order();
  EXPECT_EQ(std::vector<NodeId>(b.begin(), b.end()), (std::vector<NodeId>{0, 1, 2, 3}));
}

TEST(Traversals, AllFamiliesAreBijectionsAndSeeded) {
  Rng rng(2);
  for (int k = 0; k < 40; ++k) {
    const Graph g = gen_random_connected(1 + k, 0.1, rng);
    for (auto fam : {OrderingFamily::cuthill_mckee, OrderingFamily::bfs, OrderingFamily::dfs, OrderingFamily::random}) {
      OrderingSpec spec{fam, StartPolicy::sampled};
      Rng a(k), b(k);
      const Ordering p = make_ordering(g, spec, &a);
      expect_bijection(p, g.node_count());
      EXPECT_EQ(p, make_ordering(g, spec, &b));
    }
  }
}

TEST(Traversals, RandomOrderingAcceptsDisconnected) {
  Rng rng(4);
  expect_bijection(random_ordering(make(4, {{0, 1}, {2, 3}}), rng), 4);
  EXPECT_THROW(bfs_ordering(make(4, {{0, 1}, {2, 3}}), rng), ConnectivityError);
}

TEST(ApplyOrdering, Examples) {
  const Graph p3 = path(3);
  EXPECT_EQ(apply_ordering(p3, Ordering::identity(3)), p3);
  const Graph rev = apply_ordering(p3, Ordering::from_ranks({3, 2, 1}));
  EXPECT_EQ(rev.edges(), p3.edges());
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const Graph g = gen_random_connected(2 + k, 0.2, rng);
    EXPECT_EQ(apply_ordering(g, random_ordering(g, rng)).edge_count(), g.edge_count());
  }
}

TEST(OrderingNames, ParseAndPrint) {
  for (auto fam : {OrderingFamily::identity, OrderingFamily::cuthill_mckee, OrderingFamily::bfs, OrderingFamily::dfs,
                   OrderingFamily::random})
    EXPECT_EQ(parse_ordering_family(to_string(fam)), fam);
  EXPECT_THROW(parse_ordering_family("spectral"), ArgumentError);
  EXPECT_TRUE(is_deterministic({OrderingFamily::cuthill_mckee, StartPolicy::deterministic}));
  EXPECT_FALSE(is_deterministic({OrderingFamily::cuthill_mckee, StartPolicy::sampled}));
  EXPECT_FALSE(is_deterministic({OrderingFamily::bfs, StartPolicy::deterministic}));
}
