#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "geel/datasets.hpp"
#include "geel/training.hpp"

using namespace geel;

namespace {

TrainConfig config(double lr, std::size_t batch, OrderingSpec ordering, std::uint64_t seed) {
  TrainConfig c;
  c.learning_rate = lr;
  c.batch_size = batch;
  c.ordering = ordering;
  c.seed = seed;
  return c;
}

ModelOptions model(std::size_t epochs, std::size_t dim, std::size_t layers, double dropout = 0.0) {
  return {epochs, dim, layers, dropout};
}

const OrderingSpec kDeterministicCm{OrderingFamily::cuthill_mckee, StartPolicy::deterministic};

}  // namespace

TEST(Training, SinglePathLossDecreasesMonotonically) {
  const std::vector<AttributedGraph> data{untyped(gen_path(8))};
  const auto out = train_model(data, {}, {}, config(1e-2, 32, kDeterministicCm, 1), model(50, 16, 1));
  ASSERT_EQ(out.curve.size(), 50u);
  for (std::size_t e = 1; e < out.curve.size(); ++e) EXPECT_LT(out.curve[e].loss, out.curve[e - 1].loss) << e;
  EXPECT_EQ(out.run.state.epoch, 50u);
  EXPECT_EQ(out.run.state.step, 50u);
}

TEST(Training, EqualSeedsGiveBitIdenticalRuns) {
  Rng rng(3);
  std::vector<AttributedGraph> data;
  for (int i = 0; i < 6; ++i) data.push_back(untyped(gen_random_connected(5 + i, 0.2, rng)));
  CodecOptions sampled;
  for (const auto& spec : {kDeterministicCm, OrderingSpec{OrderingFamily::cuthill_mckee, StartPolicy::sampled}}) {
    sampled.ordering = spec;
    const auto cfg = config(1e-2, 4, spec, 42);
    const auto a = train_model(data, {}, sampled, cfg, model(5, 8, 2, 0.1));
    const auto b = train_model(data, {}, sampled, cfg, model(5, 8, 2, 0.1));
    for (std::size_t e = 0; e < 5; ++e) EXPECT_EQ(a.curve[e].loss, b.curve[e].loss);
    EXPECT_EQ(a.run.params, b.run.params);
    const auto c = train_model(data, {}, sampled, config(1e-2, 4, spec, 43), model(5, 8, 2, 0.1));
    EXPECT_NE(c.run.params, a.run.params);
  }
}

TEST(Training, MemorizesTenLobsters) {
  // Teacher forcing cannot tell the graphs apart before their streams diverge,
  // so at least ln(10)/length nats per token are unavoidable; large lobsters
  // keep that floor well under the 0.05 target.
  Rng rng(7);
  std::vector<AttributedGraph> data;
  std::set<std::vector<TokenId>> distinct;
  const GeelCodec probe(64);
  while (data.size() < 10) {
    const Graph g = gen_lobster(60, 0.5, 0.3, rng);
    if (g.node_count() < 80 || g.node_count() > 120) continue;
    if (!distinct.insert(probe.encode_ids(untyped(g), cuthill_mckee(g))).second) continue;
    data.push_back(untyped(g));
  }
  CodecOptions opt;
  opt.ordering = kDeterministicCm;
  const auto out = train_model(data, {}, opt, config(5e-3, 1, kDeterministicCm, 11), model(150, 48, 1));
  EXPECT_LT(out.curve.back().loss, 0.05);
}

TEST(Training, FitCodecSizesVocabulary) {
  const std::vector<AttributedGraph> data{untyped(gen_grid(3, 5)), untyped(gen_path(4))};
  Rng rng(1);
  CodecOptions opt;
  opt.ordering = kDeterministicCm;
  const auto fit = fit_codec(data, opt, {}, rng);
  EXPECT_EQ(fit.corpus_max_nodes, 15u);
  EXPECT_EQ(fit.max_nodes, 30u);
  const auto& geel = dynamic_cast<const GeelCodec&>(*fit.codec);
  EXPECT_EQ(geel.vocabulary().gap_bound(), bandwidth(gen_grid(3, 5), cuthill_mckee(gen_grid(3, 5))));

  opt.ordering = {OrderingFamily::random};
  const auto wide = fit_codec(data, opt, {}, rng);
  EXPECT_EQ(dynamic_cast<const GeelCodec&>(*wide.codec).vocabulary().gap_bound(), 14u);
  EXPECT_THROW(fit_codec(std::vector<AttributedGraph>{}, opt, {}, rng), ArgumentError);
}

TEST(Training, OverlongEncodingsAreSkipped) {
  const std::vector<AttributedGraph> data{untyped(gen_path(4))};
  const GeelCodec codec(1);
  EncodedSequence seq;
  EXPECT_TRUE(encode_for_training(data[0], codec, Ordering::identity(4), 8, 0, seq));
  EXPECT_EQ(seq.tokens.size(), 5u);
  // a non-contiguous ordering needs gap 2, outside the vocabulary
  EXPECT_FALSE(encode_for_training(data[0], codec, Ordering::from_ranks({1, 3, 2, 4}), 8, 0, seq));
  EXPECT_TRUE(encode_for_training(data[0], codec, Ordering::identity(4), 8, 3, seq));
  EXPECT_EQ(seq.tokens.size(), 3u);
  EXPECT_FALSE(encode_for_training(data[0], codec, Ordering::identity(4), 2, 0, seq));
}

TEST(Training, EpochsHonorTheStateSchedule) {
  const std::vector<AttributedGraph> data{untyped(gen_path(6)), untyped(gen_grid(2, 3))};
  const auto cfg = config(1e-2, 1, kDeterministicCm, 2);
  Rng rng(1);
  CodecOptions opt;
  opt.ordering = kDeterministicCm;
  const auto fit = fit_codec(data, opt, {}, rng);
  auto run = start_training(fit, 8, 1, 0.0, cfg);
  train_epoch(run.state, run.params, data, *fit.codec, run.model_config, cfg);
  EXPECT_EQ(run.state.step, 2u);
  run.state.learning_rate = 0.0;
  const Parameters frozen = run.params;
  train_epoch(run.state, run.params, data, *fit.codec, run.model_config, cfg);
  EXPECT_EQ(run.params, frozen);
  run.state.learning_rate = 1e-2;
  run.state.batch_size = 2;
  train_epoch(run.state, run.params, data, *fit.codec, run.model_config, cfg);
  EXPECT_EQ(run.state.step, 5u);
  EXPECT_NE(run.params, frozen);
}
