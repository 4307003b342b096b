#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "geel/datasets.hpp"

using namespace geel;

namespace {

// Remaining nodes after stripping every node of degree <= 1, `rounds` times.
std::vector<NodeId> strip_leaves(const Graph& g, int rounds) {
  std::vector<bool> alive(g.node_count(), true);
  for (int r = 0; r < rounds; ++r) {
    std::vector<NodeId> drop;
    for (NodeId u = 0; u < g.node_count(); ++u) {
      if (!alive[u]) continue;
      std::size_t d = 0;
      for (NodeId v : g.neighbors(u)) d += alive[v];
      if (d <= 1) drop.push_back(u);
    }
    for (NodeId u : drop) alive[u] = false;
  }
  std::vector<NodeId> out;
  for (NodeId u = 0; u < g.node_count(); ++u)
    if (alive[u]) out.push_back(u);
  return out;
}

bool induces_path(const Graph& g, const std::vector<NodeId>& nodes) {
  if (nodes.size() <= 1) return true;
  const std::set<NodeId> in(nodes.begin(), nodes.end());
  std::size_t edges = 0, ends = 0;
  for (NodeId u : nodes) {
    std::size_t d = 0;
    for (NodeId v : g.neighbors(u)) d += in.contains(v);
    if (d == 0 || d > 2) return false;
    ends += d == 1;
    edges += d;
  }
  // a tree with max degree 2 and two ends; connectivity follows from edges = n - 1 in a forest
  return edges / 2 == nodes.size() - 1 && ends == 2;
}

double binomial_sd(double n, double p) { return std::sqrt(n * p * (1.0 - p)); }

}  // namespace

TEST(Grid, EdgeCountFormula) {
  EXPECT_EQ(gen_grid(2, 2).edge_count(), 4u);
  EXPECT_TRUE(gen_grid(2, 2).has_edge(0, 1));
  EXPECT_TRUE(gen_grid(2, 2).has_edge(1, 3));
  EXPECT_EQ(gen_grid(3, 4).edge_count(), 17u);
  for (std::size_t p = 2; p <= 9; ++p)
    for (std::size_t q = 2; q <= 9; ++q) {
      const Graph g = gen_grid(p, q);
      std::size_t enumerated = 0;
      for (NodeId u = 0; u < g.node_count(); ++u)
        for (NodeId v = u + 1; v < g.node_count(); ++v) {
          const bool adjacent = (u / q == v / q && v == u + 1) || v == u + q;
          EXPECT_EQ(g.has_edge(u, v), adjacent);
          enumerated += adjacent;
        }
      EXPECT_EQ(enumerated, p * (q - 1) + q * (p - 1));
      EXPECT_TRUE(is_connected(g));
    }
  EXPECT_THROW(gen_grid(1, 5), ArgumentError);
}

TEST(Grid, CuthillMcKeeBandwidthPinForSmallGrids) {
  // Corner 0 with id tie-breaks sweeps along rows first. That reaches min(p, q)
  // when rows are no longer than columns; wide grids with 3+ rows pay one more.
  for (std::size_t p = 2; p <= 5; ++p)
    for (std::size_t q = 2; q <= 5; ++q) {
      const Graph g = gen_grid(p, q);
      const std::size_t expected = (p >= 3 && p < q) ? p + 1 : std::min(p, q);
      EXPECT_EQ(bandwidth(g, cuthill_mckee(g)), expected) << p << "x" << q;
      const Graph t = gen_grid(std::max(p, q), std::min(p, q));
      EXPECT_EQ(bandwidth(t, cuthill_mckee(t)), std::min(p, q)) << q << "x" << p;
    }
}

TEST(Lobster, ZeroProbabilitiesGiveAPath) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const Graph g = gen_lobster(10, 0.0, 0.0, rng);
    std::vector<NodeId> all(g.node_count());
    std::iota(all.begin(), all.end(), NodeId{0});
    EXPECT_TRUE(induces_path(g, all));
  }
}

TEST(Lobster, TwoLeafStripsLeaveAPath) {
  Rng rng(2);
  for (int i = 0; i < 300; ++i) {
    const Graph g = gen_lobster(8, 0.7, 0.6, rng);
    EXPECT_TRUE(is_connected(g));
    EXPECT_EQ(g.edge_count(), g.node_count() - 1);
    EXPECT_TRUE(induces_path(g, strip_leaves(g, 2))) << "sample " << i;
  }
}

TEST(Lobster, SeededAndValidated) {
  Rng a(9), b(9);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(gen_lobster(6, 0.5, 0.5, a), gen_lobster(6, 0.5, 0.5, b));
  EXPECT_THROW(gen_lobster(6, 1.0, 0.5, a), ArgumentError);
  EXPECT_THROW(gen_lobster(6, 0.5, -0.1, a), ArgumentError);
}

TEST(Community, CliquesJoinedByABridge) {
  Rng rng(3);
  // 0.1 * 10 = exactly one cross edge
  const Graph g = gen_community(5, 5, 1.0, 0.1, rng);
  EXPECT_EQ(g.edge_count(), 10u + 10u + 1u);
  std::size_t cross = 0;
  for (const auto& [u, v] : g.edges()) cross += (u < 5) != (v < 5);
  EXPECT_EQ(cross, 1u);
  for (NodeId u = 0; u < 5; ++u)
    for (NodeId v = u + 1; v < 5; ++v) EXPECT_TRUE(g.has_edge(u, v) && g.has_edge(u + 5, v + 5));
}

TEST(Community, ConnectedWithBinomialEdgeCounts) {
  const std::size_t n1 = 8, n2 = 8;
  const double p = 0.5;
  const double pairs = 2.0 * 28.0;
  const std::size_t cross = 2;  // ceil(0.1 * 16)
  const double mean = pairs * p, sd = binomial_sd(pairs, p);
  std::size_t outside = 0;
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const Graph g = gen_community(n1, n2, p, 0.1, rng);
    ASSERT_TRUE(is_connected(g));
    const double intra = static_cast<double>(g.edge_count() - cross);
    total += intra;
    outside += std::abs(intra - mean) > 3.29 * sd;
  }
  EXPECT_LE(outside, 10u);
  EXPECT_NEAR(total / 1000.0, mean, 0.5);
}

TEST(Community, UnreachableConnectivityFails) {
  Rng rng(4);
  EXPECT_THROW(gen_community(5, 5, 0.0, 0.1, rng), Error);
  EXPECT_THROW(gen_community(1, 5, 0.5, 0.1, rng), ArgumentError);
}

TEST(Jsonl, RoundTripPlainAndTyped) {
  Dataset plain;
  plain.records.push_back(to_record(gen_grid(2, 3), "grid-0"));
  plain.records.push_back(to_record(gen_path(1)));
  const auto text = format_dataset(plain);
  EXPECT_EQ(text.substr(0, text.find('\n')), R"({"format":"geel-graphs","version":1})");
  const Dataset back = parse_dataset(text);
  EXPECT_EQ(back.records, plain.records);
  EXPECT_EQ(format_dataset(back), text);

  Dataset typed;
  typed.alphabets = TypeAlphabets({"C", "N"}, {"single", "double"});
  Rng rng(5);
  for (int i = 0; i < 5; ++i)
    typed.records.push_back(to_record(assign_random_types(gen_random_connected(6, 0.3, rng), typed.alphabets, rng),
                                      typed.alphabets));
  const auto path = (std::filesystem::temp_directory_path() / "geel_test_typed.jsonl").string();
  save_graphs(typed, path);
  const Dataset loaded = load_graphs(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.alphabets.node_types(), typed.alphabets.node_types());
  EXPECT_EQ(loaded.records, typed.records);
  const auto graphs = to_attributed(loaded);
  for (const auto& ag : graphs) EXPECT_NO_THROW(validate_types(ag, loaded.alphabets));
}

TEST(Jsonl, CanonicalOrdering) {
  GraphRecord r;
  r.node_count = 3;
  r.edges = {{2, 1}, {1, 0}};
  r.node_types = {"C", "C", "N"};
  r.edge_types = {"double", "single"};
  EXPECT_EQ(record_line(r),
            R"({"edge_types":["single","double"],"edges":[[0,1],[1,2]],"node_count":3,"node_types":["C","C","N"]})");
}

TEST(Jsonl, ErrorsCarryLineNumbers) {
  const std::string head = R"({"format":"geel-graphs","version":1})";
  const std::string typed_head = R"({"format":"geel-graphs","version":1,"node_types":["C"],"edge_types":["-"]})";
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_dataset(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of(head + "\n" + R"({"node_count":2,"edges":[[0,1]]})" + "\n" + R"({"node_count":2,"edges":[[1,1]]})"),
            3u);
  EXPECT_EQ(line_of(head + "\n" + R"({"node_count":2,"edges":[[0,2]]})"), 2u);
  EXPECT_EQ(line_of(head + "\n" + R"({"node_count":2,"edges":[[0,1],[1,0]]})"), 2u);
  EXPECT_EQ(line_of(head + "\n" + R"({"node_count":2,"edges":[],"colour":1})"), 2u);
  EXPECT_EQ(line_of(head + "\n" + R"({"node_count":1,"edges":[],"node_types":["C"],"edge_types":[]})"), 2u);
  EXPECT_EQ(line_of(typed_head + "\n\n" + R"({"node_count":1,"edges":[],"node_types":["Xx"],"edge_types":[]})"), 3u);
  EXPECT_EQ(line_of(typed_head + "\n" + R"({"node_count":2,"edges":[],"node_types":["C"],"edge_types":[]})"), 2u);
  EXPECT_EQ(line_of(R"({"format":"geel-graphs","version":2})"), 1u);
  EXPECT_EQ(line_of(head + "\nnot json"), 2u);
  EXPECT_THROW(parse_dataset(""), ParseError);
  EXPECT_THROW(parse_dataset(R"({"node_count":1,"edges":[]})"), ParseError);

  try {
    parse_dataset(typed_head + "\n" + R"({"node_count":1,"edges":[],"node_types":["Xx"],"edge_types":[]})");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("Xx"), std::string::npos);
  }
  try {
    parse_dataset(R"({"format":"geel-graphs","version":2})");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("newer"), std::string::npos);
  }
}

TEST(Split, EightyTwenty) {
  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  Rng rng(6);
  const auto [train, test] = split(items, 0.8, rng);
  EXPECT_EQ(train.size(), 80u);
  EXPECT_EQ(test.size(), 20u);
  std::set<int> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  EXPECT_EQ(all.size(), 100u);
  Rng again(6);
  EXPECT_EQ(split(items, 0.8, again).first, train);
  EXPECT_THROW(split(items, 1.0, rng), ArgumentError);
  EXPECT_EQ(split(std::vector<int>(7), 0.5, rng).first.size(), 4u);
}

TEST(Corpus, FamiliesRespectRanges) {
  Rng rng(7);
  CorpusSpec spec;
  spec.count = 30;
  for (auto fam : {GraphFamily::grid, GraphFamily::lobster, GraphFamily::community, GraphFamily::path}) {
    spec.family = fam;
    const auto graphs = generate_corpus(spec, rng);
    ASSERT_EQ(graphs.size(), 30u);
    for (const auto& g : graphs) {
      EXPECT_TRUE(is_connected(g));
      if (fam == GraphFamily::grid) {
        EXPECT_GE(g.node_count(), 16u);
        EXPECT_LE(g.node_count(), 64u);
      }
      if (fam == GraphFamily::lobster || fam == GraphFamily::path) {
        EXPECT_GE(g.node_count(), spec.min_nodes);
        EXPECT_LE(g.node_count(), spec.max_nodes);
      }
      if (fam == GraphFamily::community) {
        EXPECT_GE(g.node_count(), 12u);
        EXPECT_LE(g.node_count(), 20u);
      }
    }
  }
  EXPECT_EQ(parse_graph_family("lobster"), GraphFamily::lobster);
  EXPECT_THROW(parse_graph_family("ego"), ArgumentError);
}

TEST(Stats, PathsAndGrids) {
  Dataset d;
  for (std::size_t n : {2, 5, 9}) d.records.push_back(to_record(gen_path(n)));
  auto s = corpus_stats(d);
  EXPECT_EQ(s.bandwidth, 1u);
  EXPECT_EQ(s.pair_vocab(), 2u);
  EXPECT_EQ(s.b_squared(), 1u);
  EXPECT_EQ(s.rep_size(), 8u);
  EXPECT_EQ(s.n_squared(), 81u);
  EXPECT_EQ(s.max_plain_length, 10u);
  // only the last rank of a path is a source of nothing
  EXPECT_EQ(s.max_attributed_length, 9u + 16u + 1u + 2u);
  EXPECT_EQ(s.over_2m_plus_n, 3u);

  d.records.push_back(to_record(gen_grid(5, 5)));
  GraphRecord split_rec;
  split_rec.node_count = 4;
  split_rec.edges = {{0, 1}, {2, 3}};
  split_rec.name = "two-parts";
  d.records.push_back(split_rec);
  s = corpus_stats(d);
  EXPECT_EQ(s.graph_count, 4u);
  EXPECT_EQ(s.bandwidth, 5u);
  EXPECT_EQ(s.rep_size(), 40u);
  ASSERT_EQ(s.exceptions.size(), 1u);
  EXPECT_EQ(s.exceptions[0].name, "two-parts");
  EXPECT_EQ(s.to_json().at("vocab_pairs"), 30);
  EXPECT_THROW(corpus_stats(d, {OrderingFamily::bfs}), ArgumentError);
}

TEST(Stats, AttributedVocabularyCounts) {
  Dataset d;
  d.alphabets = TypeAlphabets({"C", "N", "O"}, {"-", "="});
  d.records.push_back(to_record(gen_grid(3, 3)));
  const auto s = corpus_stats(d);
  EXPECT_EQ(s.bandwidth, 3u);
  EXPECT_EQ(s.attributed_vocab(), 3u * 5u + 3u + 2u + 2u);
  EXPECT_EQ(s.attributed_vocab_compact(), 6u + 5u);
  Rng rng(8);
  const Graph g = gen_random_connected(12, 0.2, rng);
  const Ordering pi = cuthill_mckee(g);
  std::set<Rank> sources;
  for (const auto& [u, v] : g.edges()) sources.insert(std::min(pi.rank(u), pi.rank(v)));
  EXPECT_EQ(dummy_tuple_count(g, pi), g.node_count() - sources.size());
}
