#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "geel/datasets.hpp"
#include "geel/sampler.hpp"
#include "geel/training.hpp"

using namespace geel;

namespace {

Parameters random_model(std::size_t vocab, std::size_t max_nodes, std::uint64_t seed, std::size_t dim = 8) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = dim;
  c.num_layers = 1;
  c.input_dropout = 0.0;
  c.max_nodes = max_nodes;
  Rng rng(seed);
  return Parameters::initialized(c, rng);
}

double empirical_entropy(const std::vector<double>& logits, double temperature) {
  Rng rng(5);
  std::vector<double> scratch;
  std::map<TokenId, double> counts;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    TokenId t = 0;
    sample_token(logits, nullptr, temperature, rng, t, scratch);
    counts[t] += 1.0;
  }
  double h = 0.0;
  for (const auto& [t, c] : counts) h -= c / draws * std::log(c / draws);
  return h;
}

}  // namespace

TEST(SampleToken, RespectsMaskAndReportsDeadEnds) {
  const std::vector<double> logits{5.0, 0.0, -1.0, 2.0};
  std::vector<bool> allowed{false, true, true, false};
  Rng rng(1);
  std::vector<double> scratch;
  for (int i = 0; i < 500; ++i) {
    TokenId t = 99;
    ASSERT_TRUE(sample_token(logits, &allowed, 1.0, rng, t, scratch));
    EXPECT_TRUE(t == 1 || t == 2);
  }
  allowed.assign(4, false);
  TokenId t = 0;
  EXPECT_FALSE(sample_token(logits, &allowed, 1.0, rng, t, scratch));
}

TEST(SampleToken, FrequenciesFollowSoftmax) {
  const std::vector<double> logits{1.0, 0.0, std::log(2.0)};
  Rng rng(2);
  std::vector<double> scratch;
  std::vector<double> counts(3, 0.0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    TokenId t = 0;
    sample_token(logits, nullptr, 1.0, rng, t, scratch);
    counts[t] += 1.0;
  }
  const double z = std::exp(1.0) + 1.0 + 2.0;
  EXPECT_NEAR(counts[0] / draws, std::exp(1.0) / z, 0.01);
  EXPECT_NEAR(counts[1] / draws, 1.0 / z, 0.01);
  EXPECT_NEAR(counts[2] / draws, 2.0 / z, 0.01);
}

TEST(SampleToken, EntropyGrowsWithTemperature) {
  const std::vector<double> logits{2.0, 1.0, 0.0, -1.0, -3.0};
  const double cold = empirical_entropy(logits, 0.3);
  const double unit = empirical_entropy(logits, 1.0);
  const double hot = empirical_entropy(logits, 3.0);
  EXPECT_LT(cold, unit);
  EXPECT_LT(unit, hot);
  EXPECT_LT(hot, std::log(5.0) + 1e-9);
}

TEST(Sampler, MemorizedPathIsReproducedAtLowTemperature) {
  const Graph path = gen_path(6);
  const std::vector<AttributedGraph> data{untyped(path)};
  TrainConfig tc;
  tc.learning_rate = 1e-2;
  tc.ordering = {OrderingFamily::cuthill_mckee, StartPolicy::deterministic};
  CodecOptions co;
  co.ordering = tc.ordering;
  const auto out = train_model(data, {}, co, tc, {200, 16, 1, 0.0});
  const auto& codec = *out.fit.codec;
  const auto expected = codec.encode_ids(data[0], cuthill_mckee(path));

  SampleConfig sc;
  sc.num_graphs = 20;
  sc.temperature = 0.05;
  sc.seed = 3;
  const auto batch = sample_graphs(out.run.params, codec, sc);
  EXPECT_EQ(batch.report.valid, 20u);
  for (const auto& s : batch.streams) EXPECT_EQ(s.tokens, expected);
  for (const auto& g : batch.graphs) EXPECT_EQ(g.graph, apply_ordering(path, cuthill_mckee(path)));
}

TEST(Sampler, GrammarMaskingAlwaysDecodes) {
  const TypeAlphabets alpha({"C", "N", "O"}, {"-", "="});
  const AttributedCodec codec(AttributedVocabulary(3, alpha));
  const auto params = random_model(codec.vocab_size(), 12, 4);
  SampleConfig sc;
  sc.num_graphs = 200;
  sc.masking = Masking::grammar;
  sc.seed = 9;
  const auto batch = sample_graphs(params, codec, sc);
  EXPECT_EQ(batch.report.generated, 200u);
  // max_tokens is the only way out: the budget keeps every walk finite
  EXPECT_EQ(batch.report.valid + (batch.report.failures.contains("max_tokens") ? batch.report.failures.at("max_tokens") : 0),
            200u);
  for (const auto& s : batch.streams) {
    ASSERT_GE(s.tokens.size(), 2u);
    EXPECT_EQ(codec.vocabulary().token(s.tokens[1]).kind, AttributedToken::Kind::node_type);
  }
  for (const auto& g : batch.graphs) {
    EXPECT_NO_THROW(validate_types(g, alpha));
    EXPECT_LE(g.graph.node_count(), 12u);
  }
}

TEST(Sampler, ValidityMaskingVersusUnmasked) {
  const GeelCodec codec(3);
  const auto params = random_model(codec.vocab_size(), 20, 6);
  SampleConfig sc;
  sc.num_graphs = 300;
  sc.seed = 1;
  sc.masking = Masking::validity;
  const auto masked = sample_graphs(params, codec, sc);
  EXPECT_EQ(masked.report.validity(), 1.0);
  sc.masking = Masking::off;
  const auto raw = sample_graphs(params, codec, sc);
  EXPECT_LT(raw.report.validity(), 1.0);
  std::size_t total = raw.report.valid;
  for (const auto& [k, n] : raw.report.failures) total += n;
  EXPECT_EQ(total, raw.report.generated);
  EXPECT_EQ(raw.report.seconds.size(), raw.report.generated);
  const auto j = raw.report.to_json();
  EXPECT_EQ(j.at("failures").size(), 7u);
  EXPECT_EQ(j.at("generated"), 300);
}

TEST(Sampler, SeededRunsAreIdenticalAcrossThreadCounts) {
  const GeelCodec codec(2);
  const auto params = random_model(codec.vocab_size(), 15, 8);
  SampleConfig sc;
  sc.num_graphs = 40;
  sc.seed = 77;
  sc.threads = 1;
  const auto one = sample_graphs(params, codec, sc);
  const auto again = sample_graphs(params, codec, sc);
  sc.threads = 4;
  const auto four = sample_graphs(params, codec, sc);
  ASSERT_EQ(one.streams.size(), four.streams.size());
  for (std::size_t i = 0; i < one.streams.size(); ++i) {
    EXPECT_EQ(one.streams[i].tokens, again.streams[i].tokens);
    EXPECT_EQ(one.streams[i].tokens, four.streams[i].tokens);
  }
  EXPECT_EQ(one.graphs, four.graphs);
  sc.seed = 78;
  const auto other = sample_graphs(params, codec, sc);
  std::size_t same = 0;
  for (std::size_t i = 0; i < one.streams.size(); ++i) same += one.streams[i].tokens == other.streams[i].tokens;
  EXPECT_LT(same, one.streams.size());
}

TEST(Sampler, ResamplingAndAttemptLimits) {
  const GeelCodec codec(3);
  const auto params = random_model(codec.vocab_size(), 20, 6);
  SampleConfig sc;
  sc.num_graphs = 10;
  sc.seed = 2;
  sc.resample_invalid = true;
  const auto batch = sample_graphs(params, codec, sc);
  EXPECT_LE(batch.report.generated, 100u);
  if (batch.report.generated < 100u) {
    EXPECT_EQ(batch.graphs.size(), 10u);
  }
  EXPECT_EQ(batch.report.valid, batch.graphs.size());

  sc.max_tokens = 1;
  sc.max_attempts = 7;
  const auto capped = sample_graphs(params, codec, sc);
  EXPECT_LE(capped.report.generated, 7u);
}

TEST(Sampler, StopReasons) {
  const GeelCodec codec(3);
  const auto params = random_model(codec.vocab_size(), 2, 10);
  SampleConfig sc;
  sc.num_graphs = 200;
  sc.max_tokens = 2;
  const auto batch = sample_graphs(params, codec, sc);
  EXPECT_TRUE(batch.report.failures.contains("max_tokens"));
  for (const auto& s : batch.streams) {
    EXPECT_LE(s.tokens.size(), 3u);
    if (s.stop == SampleFailure::max_tokens) {
      EXPECT_EQ(s.tokens.size(), 3u);
    }
  }
  EXPECT_THROW(sample_graphs(random_model(5, 2, 1), codec, sc), DimensionError);
  sc.temperature = 0.0;
  EXPECT_THROW(sample_graphs(params, codec, sc), ArgumentError);
}

TEST(Timing, SweepIsSortedAndCsvShaped) {
  const GeelCodec codec(2);
  const auto params = random_model(codec.vocab_size(), 4, 3);
  EXPECT_EQ(timing_csv({}), "m_edges,seconds\n");
  const auto rows = timing_sweep(params, codec, {40, 10, 20}, 2, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].m_edges, 10u);
  EXPECT_EQ(rows[2].m_edges, 40u);
  for (const auto& r : rows) EXPECT_GT(r.seconds, 0.0);
  const auto csv = timing_csv(rows);
  EXPECT_EQ(csv.substr(0, 16), "m_edges,seconds\n");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Masking, Names) {
  for (auto m : {Masking::off, Masking::validity, Masking::grammar}) EXPECT_EQ(parse_masking(to_string(m)), m);
  EXPECT_THROW(parse_masking("strict"), ArgumentError);
}
